use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use trialsize::embeddings::{
    kmeans, lloyd, sgns_gradients, train_skipgram, EmbeddingTable, KMeansOptions, SkipGramOptions,
};

const FD_REL_TOL: f64 = 1e-4;

#[test]
fn lloyd_sse_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..100 {
        let n = rng.random_range(10..80);
        let dim = rng.random_range(1..6);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let k = rng.random_range(1..=8.min(n));
        let run = lloyd(&points, k, trial, 50, 0.0).unwrap();
        for w in run.sse_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "trial {trial}: {:?}", run.sse_history);
        }
    }
}

#[test]
fn recovers_separated_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let centers = [[0.0, 0.0], [20.0, 0.0], [0.0, 20.0], [20.0, 20.0]];
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut table = EmbeddingTable::new(2);
    for (b, c) in centers.iter().enumerate() {
        for i in 0..25 {
            let v = vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)];
            table.entries.insert(format!("b{b}_{i:02}"), v);
        }
    }
    let model = kmeans(&table, &KMeansOptions { k: 4, seed: 3, ..KMeansOptions::default() }).unwrap();
    for b in 0..4 {
        let ids: std::collections::BTreeSet<usize> =
            (0..25).map(|i| model.cluster_of(&format!("b{b}_{i:02}"))).collect();
        assert_eq!(ids.len(), 1, "blob {b} split across {ids:?}");
    }
    let all: std::collections::BTreeSet<usize> = (0..4).map(|b| model.cluster_of(&format!("b{b}_00"))).collect();
    assert_eq!(all.len(), 4);
    assert_eq!(model.cluster_of("unseen"), 4);
}

fn rel_close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= FD_REL_TOL * analytic.abs().max(numeric.abs()).max(1e-3)
}

#[test]
fn sgns_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let dim = 6;
    // Five-word vocabulary: center, context and three negatives.
    let words: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..dim).map(|_| rng.random_range(-0.8..0.8)).collect())
        .collect();
    let loss = |w: &[Vec<f64>]| {
        let negs: Vec<&[f64]> = w[2..].iter().map(Vec::as_slice).collect();
        sgns_gradients(&w[0], &w[1], &negs).loss
    };
    let negs: Vec<&[f64]> = words[2..].iter().map(Vec::as_slice).collect();
    let g = sgns_gradients(&words[0], &words[1], &negs);
    let analytic: Vec<&Vec<f64>> = [&g.center, &g.context].into_iter().chain(g.negatives.iter()).collect();
    let h = 1e-6;
    for (w, grad) in analytic.iter().enumerate() {
        for d in 0..dim {
            let mut plus = words.clone();
            plus[w][d] += h;
            let mut minus = words.clone();
            minus[w][d] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!(rel_close(grad[d], numeric), "word {w} dim {d}: {} vs {numeric}", grad[d]);
        }
    }
}

#[test]
fn skipgram_separates_topics() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let topics = [["insulin", "glucose", "diabetes", "metformin"], ["asthma", "inhaler", "wheeze", "budesonide"]];
    let sentences: Vec<Vec<String>> = (0..400)
        .map(|i| {
            let t = &topics[i % 2];
            (0..8).map(|_| t[rng.random_range(0..4)].to_string()).collect()
        })
        .collect();
    let opts = SkipGramOptions { dimension: 16, epochs: 10, seed: 4, ..SkipGramOptions::default() };
    let table = train_skipgram(&sentences, &opts).unwrap();
    let within = table.cosine("insulin", "glucose").unwrap();
    let across = table.cosine("insulin", "inhaler").unwrap();
    assert!(within > across, "within {within} across {across}");
    assert_eq!(table, train_skipgram(&sentences, &opts).unwrap());
}

#[test]
fn merged_number_words_survive_the_text_format() {
    use trialsize::corpus::{Abstract, Category};
    use trialsize::embeddings::{parse_embeddings, token_sentences};
    let a = Abstract::build(
        "m",
        None,
        &[(Some(Category::Methods), None, "One hundred and fifty-eight patients were enrolled.")],
    )
    .unwrap();
    let sentences = token_sentences(&[a]);
    assert_eq!(sentences[0][0], "one_hundred_and_fifty-eight");
    let opts = SkipGramOptions { dimension: 4, epochs: 1, ..SkipGramOptions::default() };
    let table = train_skipgram(&sentences, &opts).unwrap();
    let parsed = parse_embeddings(&table.to_text()).unwrap();
    assert_eq!(parsed.entries.keys().collect::<Vec<_>>(), table.entries.keys().collect::<Vec<_>>());
    let model = kmeans(&parsed, &KMeansOptions { k: 2, ..KMeansOptions::default() }).unwrap();
    assert!(model.cluster_of("one hundred and fifty-eight") < 2);
}
