//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trialsize::candidates::{extract_candidates, label_candidates};
use trialsize::corpus::{Abstract, Category};
use trialsize::embeddings::{
    kmeans, lloyd, sgns_gradients, token_sentences, train_skipgram, EmbeddingTable, KMeansOptions, SkipGramOptions,
};
use trialsize::features::{FeatureGroup, FeatureVector, Lexicons};
use trialsize::pipeline::{ablate, ablation_table, clopper_pearson, decode, format_accuracy_ci, format_percent, TrainConfig};
use trialsize::svm::{platt_fit, platt_gradient, platt_targets, train_smo, KernelParams, SmoOptions};
use trialsize::synth::{generate_split, SynthOptions};

// Pinned tolerances and budgets.
const QP_ALPHA_TOL: f64 = 1e-6;
const KKT_TOL: f64 = 1e-6;
const SMO_SOLVER_TOL: f64 = 1e-10;
const SMO_INSTANCES: usize = 200;
const SMO_BUDGET: Duration = Duration::from_secs(60);
const PLATT_GRAD_TOL: f64 = 1e-6;
const PLATT_INSTANCES: usize = 50;
const KMEANS_DATASETS: usize = 100;
const SSE_SLACK: f64 = 1e-12;
const FD_REL_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-6;
const MIN_TEST_ACCURACY: f64 = 0.90;
const EXPERIMENT_BUDGET: Duration = Duration::from_secs(600);
const ARGMAX_SETS: usize = 1000;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn methods_abstract(id: &str, gold: Option<u64>, text: &str) -> Abstract {
    Abstract::build(id, gold, &[(Some(Category::Methods), Some("Methods"), text)]).unwrap()
}

fn criterion_1() -> Outcome {
    let a = methods_abstract(
        "clustered",
        None,
        "Between 1996 and 2001, 1477 patients from 70 hospitals in 14 countries were enrolled.",
    );
    let values: Vec<u64> = extract_candidates(&a).iter().map(|c| c.value).collect();
    check(values == [1996, 2001, 1477, 70, 14], || format!("clustered sentence gave {values:?}"))?;
    let b = methods_abstract(
        "arms",
        Some(145),
        "Patients were randomly assigned to surgery (n = 76) or conservative care (n = 69).",
    );
    let labelled = label_candidates(&b).map_err(|e| e.to_string())?;
    let values: Vec<u64> = labelled.iter().map(|l| l.candidate.value).collect();
    check(values == [76, 69], || format!("arm sentence gave {values:?}"))?;
    let positives = labelled.iter().filter(|l| l.is_size).count();
    check(positives == 0, || format!("{positives} positives with gold 145"))?;
    Ok("candidates {1996, 2001, 1477, 70, 14}; arms {76, 69} with no positive".into())
}

fn criterion_2() -> Outcome {
    let rows: [(u64, &str, &str); 6] = [
        (44, "76", "95"),
        (40, "66", "90"),
        (38, "62", "87"),
        (6, "4.5", "24"),
        (41, "69", "91"),
        (42, "71", "93"),
    ];
    for (k, lo, hi) in rows {
        let (l, h) = clopper_pearson(k, 50, 0.95).map_err(|e| e.to_string())?;
        let got = (format_percent(l), format_percent(h));
        check(got.0 == lo && got.1 == hi, || format!("{k}/50 gave {}-{}, expected {lo}-{hi}", got.0, got.1))?;
    }
    let (l, h) = clopper_pearson(44, 50, 0.95).unwrap();
    let shown = format_accuracy_ci(0.88, l, h);
    check(shown == "88 (76 \u{2013} 95)", || format!("display {shown}"))?;
    Ok("six intervals over n = 50 match the printed bounds".into())
}

/// Minimum of `1/2 a'Qa - sum(a)` over `y'a = 0, 0 <= a <= c`, found by
/// solving the stationarity system for every lower/upper/free split.
fn qp_oracle(k: &DMatrix<f64>, y: &[f64], c: f64) -> Vec<f64> {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let bound_sum: f64 = (0..n).filter(|&i| state[i] == 1).map(|i| y[i] * c).sum();
        if free.is_empty() {
            if bound_sum.abs() > 1e-12 {
                continue;
            }
        } else {
            let m = free.len();
            let mut a = DMatrix::zeros(m + 1, m + 1);
            let mut b = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, m)] = y[i];
                a[(m, r)] = y[i];
                b[r] = 1.0 - (0..n).filter(|&j| state[j] == 1).map(|j| q[(i, j)] * c).sum::<f64>();
            }
            b[m] = -bound_sum;
            let Some(sol) = a.lu().solve(&b) else { continue };
            if (0..m).any(|r| sol[r] < -1e-12 || sol[r] > c + 1e-12) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
        }
        let av = DVector::from_vec(alpha.clone());
        let obj = 0.5 * (av.transpose() * &q * &av)[(0, 0)] - av.sum();
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, alpha));
        }
    }
    best.unwrap().1
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = SmoOptions {
        tol: SMO_SOLVER_TOL,
        ..SmoOptions::default()
    };
    let mut worst = 0.0f64;
    for trial in 0..SMO_INSTANCES {
        let n = rng.random_range(2..=8);
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let params = KernelParams::new(
            [0.05, 0.5, 1.0, 5.0, 50.0][rng.random_range(0..5)],
            [0.1, 0.5, 1.0, 3.0][rng.random_range(0..4)],
        )
        .unwrap();
        let data: Vec<FeatureVector> = pts
            .iter()
            .map(|p| FeatureVector::from_pairs(vec![(0, p[0]), (1, p[1]), (2, p[2])]))
            .collect();
        let svm = train_smo(&data, &labels, params, &opts).map_err(|e| e.to_string())?;
        let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            let d: f64 = (0..3).map(|t| (pts[i][t] - pts[j][t]).powi(2)).sum();
            (-params.gamma * d).exp()
        });
        let oracle = qp_oracle(&gram, &y, params.cost);
        for (a, o) in svm.solution.alpha.iter().zip(&oracle) {
            worst = worst.max((a - o).abs());
        }
        check(worst < QP_ALPHA_TOL, || format!("instance {trial}: alpha differs by {worst:e}"))?;
        for (i, x) in data.iter().enumerate() {
            let m = y[i] * svm.decision_value(x);
            let a = svm.solution.alpha[i];
            let ok = if a <= 0.0 {
                m >= 1.0 - KKT_TOL
            } else if a >= params.cost {
                m <= 1.0 + KKT_TOL
            } else {
                (m - 1.0).abs() < KKT_TOL
            };
            check(ok, || format!("instance {trial}: KKT violated at point {i} (alpha {a}, margin {m})"))?;
        }
    }
    let took = start.elapsed();
    check(took < SMO_BUDGET, || format!("took {took:?}"))?;
    Ok(format!(
        "{SMO_INSTANCES} instances, max |alpha - oracle| {worst:.1e}, KKT within {KKT_TOL:e}, {:.2}s",
        took.as_secs_f64()
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for trial in 0..PLATT_INSTANCES {
        let n = rng.random_range(10..300);
        let shift = rng.random_range(0.5..3.0);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        labels[0] = true;
        labels[1] = false;
        let f: Vec<f64> = labels
            .iter()
            .map(|&l| rng.random_range(-2.0..2.0) + if l { shift } else { -shift })
            .collect();
        let p = platt_fit(&f, &labels).map_err(|e| e.to_string())?;
        let (ga, gb) = platt_gradient(&f, &platt_targets(&labels), p.a, p.b);
        worst = worst.max(ga.hypot(gb));
        check(ga.hypot(gb) < PLATT_GRAD_TOL, || format!("instance {trial}: gradient norm {:e}", ga.hypot(gb)))?;
        let mut grid = f.clone();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let dir = -p.a.signum();
        check(p.a != 0.0, || format!("instance {trial}: A = 0"))?;
        for w in grid.windows(2) {
            let (p0, p1) = (p.probability(w[0]), p.probability(w[1]));
            check(dir * (p1 - p0) > 0.0, || format!("instance {trial}: not strictly monotone at {}", w[0]))?;
        }
    }
    Ok(format!("{PLATT_INSTANCES} fits, max gradient norm {worst:.1e}, probabilities strictly monotone"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..KMEANS_DATASETS {
        let n = rng.random_range(10..120);
        let dim = rng.random_range(1..8);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect()).collect();
        let k = rng.random_range(1..=10.min(n));
        let run = lloyd(&pts, k, trial as u64, 100, 0.0).map_err(|e| e.to_string())?;
        for w in run.sse_history.windows(2) {
            check(w[1] <= w[0] + SSE_SLACK * w[0].max(1.0), || format!("dataset {trial}: SSE rose {} -> {}", w[0], w[1]))?;
        }
    }

    let centers = [[0.0, 0.0, 0.0], [15.0, 0.0, 0.0], [0.0, 15.0, 0.0], [0.0, 0.0, 15.0], [15.0, 15.0, 15.0]];
    let mut table = EmbeddingTable::new(3);
    for (b, c) in centers.iter().enumerate() {
        for i in 0..30 {
            let v = c.iter().map(|x| x + rng.random_range(-1.5..1.5)).collect();
            table.entries.insert(format!("w{b}_{i:02}"), v);
        }
    }
    let model = kmeans(&table, &KMeansOptions { k: 5, seed: 1, ..KMeansOptions::default() }).map_err(|e| e.to_string())?;
    let mut ids = std::collections::BTreeSet::new();
    for b in 0..centers.len() {
        let blob: std::collections::BTreeSet<usize> = (0..30).map(|i| model.cluster_of(&format!("w{b}_{i:02}"))).collect();
        check(blob.len() == 1, || format!("blob {b} split over {blob:?}"))?;
        ids.extend(blob);
    }
    check(ids.len() == centers.len(), || "blobs merged".into())?;

    let dim = 8;
    let vocab: Vec<Vec<f64>> = (0..5).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let loss = |w: &[Vec<f64>]| {
        let negs: Vec<&[f64]> = w[2..].iter().map(Vec::as_slice).collect();
        sgns_gradients(&w[0], &w[1], &negs).loss
    };
    let negs: Vec<&[f64]> = vocab[2..].iter().map(Vec::as_slice).collect();
    let g = sgns_gradients(&vocab[0], &vocab[1], &negs);
    let grads: Vec<&Vec<f64>> = [&g.center, &g.context].into_iter().chain(&g.negatives).collect();
    let mut worst = 0.0f64;
    for (w, grad) in grads.iter().enumerate() {
        for d in 0..dim {
            let mut plus = vocab.clone();
            plus[w][d] += FD_STEP;
            let mut minus = vocab.clone();
            minus[w][d] -= FD_STEP;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
            let rel = (grad[d] - numeric).abs() / grad[d].abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    check(worst < FD_REL_TOL, || format!("skip-gram gradient relative error {worst:e}"))?;
    Ok(format!(
        "SSE non-increasing on {KMEANS_DATASETS} datasets, 5 blobs recovered, SGNS gradient rel. error {worst:.1e}"
    ))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let (train, test) = generate_split(201, 50, SynthOptions::default()).map_err(|e| e.to_string())?;
    let mut all = train.clone();
    all.extend(test.iter().cloned());
    let sg = SkipGramOptions {
        dimension: 50,
        seed: 61,
        ..SkipGramOptions::default()
    };
    let table = train_skipgram(&token_sentences(&all), &sg).map_err(|e| e.to_string())?;
    let clusters = kmeans(&table, &KMeansOptions { k: 100, seed: 62, ..KMeansOptions::default() })
        .map_err(|e| e.to_string())?;
    let rows = ablate(&train, &test, &clusters, &Lexicons::default(), &TrainConfig::default()).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    for line in ablation_table(&rows).lines() {
        println!("    {line}");
    }
    let acc = |r: &trialsize::pipeline::AblationRow| r.report.as_ref().map(|e| e.accuracy);
    let all_acc = acc(&rows[0]).ok_or("All row failed")?;
    check(all_acc >= MIN_TEST_ACCURACY, || format!("All row accuracy {all_acc}"))?;
    let lexical = rows
        .iter()
        .find(|r| r.groups.iter().collect::<Vec<_>>() == [FeatureGroup::Lexical])
        .ok_or("no Lexical row")?;
    let lex_acc = acc(lexical).ok_or("Lexical row failed")?;
    for r in rows.iter().filter(|r| r.label != lexical.label) {
        let a = acc(r).ok_or_else(|| format!("row {} failed", r.label))?;
        check(a > lex_acc, || format!("row {} ({a}) not above Lexical ({lex_acc})", r.label))?;
    }
    check(took < EXPERIMENT_BUDGET, || format!("took {took:?}"))?;
    Ok(format!(
        "All {:.0}% on 50 test abstracts, Lexical lowest at {:.0}%, {:.0}s",
        all_acc * 100.0,
        lex_acc * 100.0,
        took.as_secs_f64()
    ))
}

fn run_cli(args: &[&str], cwd: &Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_trialsize"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("`trialsize {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    run_cli(&["synth", "--train", "60", "--test", "20", "--seed", "70", "--out", "data"], d)?;
    std::fs::write(
        d.join("config.json"),
        r#"{"cluster_k": 40, "embeddings": {"source": "train", "dimension": 20}, "seed": 71}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut models = Vec::new();
    let mut predictions = Vec::new();
    for jobs in ["1", "3", "8"] {
        let out = format!("run{jobs}");
        run_cli(&["--jobs", jobs, "train", "--config", "config.json", "--train", "data/train.jsonl", "--out", &out], d)?;
        let model = format!("{out}/model.json");
        predictions.push(run_cli(&["--jobs", jobs, "predict", "--model", &model, "--corpus", "data/test.jsonl"], d)?);
        models.push(std::fs::read(d.join(&model)).map_err(|e| e.to_string())?);
    }
    check(models.windows(2).all(|w| w[0] == w[1]), || "model files differ across --jobs".into())?;
    check(predictions.windows(2).all(|w| w[0] == w[1]), || "predictions differ across --jobs".into())?;
    let lines = predictions[0].split(|&b| b == b'\n').filter(|l| !l.is_empty()).count();
    check(lines == 20, || format!("{lines} prediction lines for 20 abstracts"))?;
    Ok(format!("model ({} bytes) and predictions identical for --jobs 1, 3, 8", models[0].len()))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let transforms: [fn(f64) -> f64; 4] = [
        |p| 3.0 * p + 1.0,
        |p| p.powi(3),
        |p| (p / (1.0 - p)).ln(),
        |p| (5.0 * p).exp(),
    ];
    for set in 0..ARGMAX_SETS {
        let n = rng.random_range(1..25);
        // Coarse values make ties common.
        let probs: Vec<f64> = (0..n).map(|_| rng.random_range(1..20) as f64 / 20.0).collect();
        let best = decode(&probs).ok_or("empty set")?;
        let max = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        check(probs[best] == max && probs[..best].iter().all(|&p| p < max), || format!("set {set}: not earliest argmax"))?;
        for (t, f) in transforms.iter().enumerate() {
            let mapped: Vec<f64> = probs.iter().map(|&p| f(p)).collect();
            check(decode(&mapped) == Some(best), || format!("set {set}: transform {t} moved the argmax"))?;
        }
    }
    Ok(format!("{ARGMAX_SETS} sets, argmax unchanged under 4 increasing transforms"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("candidate extraction on clustered-number and arm-size sentences", criterion_1),
        ("Clopper-Pearson intervals reproduce the printed table", criterion_2),
        ("SMO agrees with an exhaustive QP oracle", criterion_3),
        ("Platt calibration is stationary and monotone", criterion_4),
        ("k-means descent, blob recovery and skip-gram gradients", criterion_5),
        ("synthetic end-to-end experiment and ablation ordering", criterion_6),
        ("train and predict are identical across --jobs", criterion_7),
        ("argmax decoding is invariant to increasing transforms", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
