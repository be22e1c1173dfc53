mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use trialsize::candidates::{extract_candidates_with, CandidateRecord, DEFAULT_MIN_VALUE};
use trialsize::corpus::{import_plain, load_corpus, save_corpus, Abstract};
use trialsize::embeddings::{
    kmeans, load_embeddings, token_sentences, train_skipgram, ClusterModel, EmbeddingTable, KMeansOptions,
    SkipGramOptions,
};
use trialsize::features::{FeatureGroup, FeatureGroups, Lexicons, NamedFeature};
use trialsize::pipeline::{
    ablate, ablation_table, cross_validate, evaluate, evaluation_table, predict_corpus, train, PredictionLine,
};
use trialsize::seed;
use trialsize::svm::{FeatureSpace, GridSpec, SvmModel};
use trialsize::synth::{generate_split, SynthOptions};

use config::{EmbeddingSource, Needs, RunConfig, SkipGramConfig};

#[derive(Parser)]
#[command(name = "trialsize", version, about = "Extract trial sample sizes from abstracts")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    /// Precomputed cluster model (JSON).
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Pre-trained word vectors (word2vec text format).
    #[arg(long, conflicts_with = "no_embeddings")]
    embeddings: Option<PathBuf>,
    /// Disable word clusters.
    #[arg(long)]
    no_embeddings: bool,
    #[arg(long)]
    cluster_k: Option<usize>,
    /// Feature families, e.g. `contextual,structural`.
    #[arg(long, value_delimiter = ',')]
    groups: Option<Vec<String>>,
    /// Fix C instead of searching the grid (requires --gamma).
    #[arg(long, requires = "gamma")]
    cost: Option<f64>,
    #[arg(long, requires = "cost")]
    gamma: Option<f64>,
    /// Score grid cells by k-fold cross-validation.
    #[arg(long)]
    grid_cv: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it with a training report.
    Train(RunArgs),
    /// Predict one size per abstract as JSON lines.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Corpus in JSON lines, or plain-text abstracts with --plain.
        #[arg(long = "corpus", required = true, num_args = 1..)]
        corpus: Vec<PathBuf>,
        /// Read `HEADING: text` plain-text abstracts, one file each.
        #[arg(long)]
        plain: bool,
        /// Output file; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Accuracy with a 95% exact confidence interval.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seven-row feature ablation with a fresh grid search per row.
    Ablate(RunArgs),
    /// k-fold cross-validation over abstracts.
    Cv {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Cluster word vectors with k-means.
    Cluster {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, default_value_t = 500)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        output: PathBuf,
    },
    /// List integer candidates, optionally with their features.
    Extract {
        #[arg(long = "corpus", required = true, num_args = 1..)]
        corpus: Vec<PathBuf>,
        #[arg(long)]
        plain: bool,
        #[arg(long, default_value_t = DEFAULT_MIN_VALUE)]
        min_value: u64,
        /// Include named features; uses the model's lexicons and clusters
        /// when --model is given.
        #[arg(long)]
        dump_features: bool,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train skip-gram word vectors on a corpus.
    EmbedTrain {
        #[arg(long = "corpus", required = true, num_args = 1..)]
        corpus: Vec<PathBuf>,
        #[arg(long)]
        plain: bool,
        #[arg(long, default_value_t = 100)]
        dimension: usize,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        negatives: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        min_count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a synthetic train/test corpus pair.
    Synth {
        #[arg(long, default_value_t = 201)]
        train: usize,
        #[arg(long, default_value_t = 50)]
        test: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(cli) {
        // A closed downstream pipe (`| head`) is not a failure.
        let broken_pipe = e
            .chain()
            .filter_map(|c| c.downcast_ref::<io::Error>())
            .any(|io| io.kind() == io::ErrorKind::BrokenPipe);
        if broken_pipe {
            return;
        }
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building the worker pool")?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(args) => cmd_train(&args),
        Command::Predict {
            model,
            corpus,
            plain,
            output,
        } => cmd_predict(&model, &corpus, plain, output.as_deref()),
        Command::Evaluate { model, corpus, out } => cmd_evaluate(&model, &corpus, out.as_deref()),
        Command::Ablate(args) => cmd_ablate(&args),
        Command::Cv { run, k } => cmd_cv(&run, k),
        Command::Cluster {
            embeddings,
            k,
            seed,
            normalize,
            output,
        } => cmd_cluster(&embeddings, k, seed, normalize, &output),
        Command::Extract {
            corpus,
            plain,
            min_value,
            dump_features,
            model,
            output,
        } => cmd_extract(&corpus, plain, min_value, dump_features, model.as_deref(), output.as_deref()),
        Command::EmbedTrain {
            corpus,
            plain,
            dimension,
            window,
            negatives,
            epochs,
            min_count,
            seed,
            output,
        } => {
            let opts = SkipGramOptions {
                dimension,
                window,
                negatives,
                epochs,
                min_count,
                learning_rate: SkipGramOptions::default().learning_rate,
                seed,
            };
            cmd_embed_train(&corpus, plain, &opts, &output)
        }
        Command::Synth { train, test, seed, out } => cmd_synth(train, test, seed, &out),
    }
}

fn resolve_config(args: &RunArgs, needs: Needs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &args.train {
        cfg.train_corpus = Some(p.clone());
    }
    if let Some(p) = &args.test {
        cfg.test_corpus = Some(p.clone());
    }
    if let Some(p) = &args.unlabeled {
        cfg.unlabeled_corpus = Some(p.clone());
    }
    if let Some(p) = &args.clusters {
        cfg.clusters = Some(p.clone());
    }
    if let Some(p) = &args.embeddings {
        cfg.embeddings = EmbeddingSource::Path { path: p.clone() };
    }
    if args.no_embeddings {
        cfg.embeddings = EmbeddingSource::None;
    }
    if let Some(k) = args.cluster_k {
        cfg.cluster_k = k;
    }
    if let Some(groups) = &args.groups {
        cfg.feature_groups = groups
            .iter()
            .map(|g| FeatureGroup::parse(g).with_context(|| format!("unknown feature group {g:?}")))
            .collect::<Result<_>>()?;
    }
    if let (Some(c), Some(g)) = (args.cost, args.gamma) {
        cfg.grid = GridSpec::single(c, g);
    }
    if let Some(k) = args.grid_cv {
        cfg.grid_cv_folds = Some(k);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output_dir = Some(o.clone());
    }
    cfg.validate(needs)?;
    Ok(cfg)
}

fn read_corpus(path: &Path) -> Result<Vec<Abstract>> {
    load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn read_corpora(paths: &[PathBuf], plain: bool) -> Result<Vec<Abstract>> {
    let mut out = Vec::new();
    for p in paths {
        if plain {
            out.push(import_plain(p).with_context(|| format!("importing {}", p.display()))?);
        } else {
            out.extend(read_corpus(p)?);
        }
    }
    Ok(out)
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.clone().expect("validated");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    cfg.write_effective(&dir)?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
}

fn lexicons(cfg: &RunConfig) -> Result<Lexicons> {
    Ok(Lexicons::from_files(
        cfg.lexicons.population.as_deref(),
        cfg.lexicons.temporal.as_deref(),
        cfg.lexicons.likely_labels.as_deref(),
    )?)
}

fn skipgram_options(sg: &SkipGramConfig, global_seed: u64) -> SkipGramOptions {
    SkipGramOptions {
        dimension: sg.dimension,
        window: sg.window,
        negatives: sg.negatives,
        epochs: sg.epochs,
        min_count: sg.min_count,
        learning_rate: sg.learning_rate,
        seed: seed::derive(global_seed, "skipgram"),
    }
}

/// Cluster model for a run: a stored model, or k-means over loaded or
/// freshly trained vectors.
fn clusters(cfg: &RunConfig, labelled: &[Abstract]) -> Result<ClusterModel> {
    if let Some(p) = &cfg.clusters {
        return ClusterModel::load(p).with_context(|| format!("loading clusters {}", p.display()));
    }
    let table: EmbeddingTable = match &cfg.embeddings {
        EmbeddingSource::None => return Ok(ClusterModel::empty()),
        EmbeddingSource::Path { path } => {
            load_embeddings(path).with_context(|| format!("loading embeddings {}", path.display()))?
        }
        EmbeddingSource::Train(sg) => {
            let unlabeled = match &cfg.unlabeled_corpus {
                Some(p) => read_corpus(p)?,
                None => labelled.to_vec(),
            };
            train_skipgram(&token_sentences(&unlabeled), &skipgram_options(sg, cfg.seed))?
        }
    };
    let opts = KMeansOptions {
        k: cfg.cluster_k,
        seed: seed::derive(cfg.seed, "kmeans"),
        normalize: cfg.cluster_normalize,
        ..KMeansOptions::default()
    };
    kmeans(&table, &opts).context("clustering word vectors (adjust cluster_k?)")
}

#[derive(Serialize)]
struct TrainReport<'a> {
    abstracts: usize,
    candidate_count: usize,
    positive_count: usize,
    feature_count: usize,
    support_vectors: usize,
    cost: f64,
    gamma: f64,
    grid_accuracy: f64,
    training_accuracy: f64,
    grid: &'a [trialsize::svm::GridCell],
}

fn cmd_train(args: &RunArgs) -> Result<()> {
    let cfg = resolve_config(
        args,
        Needs {
            train: true,
            output: true,
            ..Needs::default()
        },
    )?;
    let dir = output_dir(&cfg)?;
    let corpus = read_corpus(cfg.train_corpus.as_ref().unwrap())?;
    let clusters = clusters(&cfg, &corpus)?;
    let out = train(&corpus, &clusters, &lexicons(&cfg)?, &cfg.train_config()?)?;
    out.model.save(dir.join("model.json"))?;
    let report = TrainReport {
        abstracts: corpus.len(),
        candidate_count: out.candidate_count,
        positive_count: out.positive_count,
        feature_count: out.model.space.vocabulary.len(),
        support_vectors: out.model.support_vectors.len(),
        cost: out.model.params.cost,
        gamma: out.model.params.gamma,
        grid_accuracy: out.grid.best_accuracy,
        training_accuracy: out.training_accuracy,
        grid: &out.grid.cells,
    };
    write_json(&dir.join("train_report.json"), &report)?;
    println!(
        "trained on {} abstracts ({} candidates): C = {}, gamma = {}, training accuracy {:.4}",
        report.abstracts, report.candidate_count, report.cost, report.gamma, report.training_accuracy
    );
    Ok(())
}

fn open_output(output: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_predict(model: &Path, corpus: &[PathBuf], plain: bool, output: Option<&Path>) -> Result<()> {
    let model = SvmModel::load(model).with_context(|| format!("loading model {}", model.display()))?;
    let corpus = read_corpora(corpus, plain)?;
    let mut w = open_output(output)?;
    for p in predict_corpus(&model, &corpus) {
        serde_json::to_writer(&mut w, &PredictionLine::from(&p))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_evaluate(model_path: &Path, corpus: &Path, out: Option<&Path>) -> Result<()> {
    let model = SvmModel::load(model_path).with_context(|| format!("loading model {}", model_path.display()))?;
    let corpus = read_corpus(corpus)?;
    let report = evaluate(&model, &corpus)?;
    let table = evaluation_table(&report);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("evaluation.json"), &report)?;
        fs::write(dir.join("evaluation.txt"), &table)?;
    }
    print!("{table}");
    Ok(())
}

fn cmd_ablate(args: &RunArgs) -> Result<()> {
    let cfg = resolve_config(
        args,
        Needs {
            train: true,
            test: true,
            output: true,
        },
    )?;
    let dir = output_dir(&cfg)?;
    let train_corpus = read_corpus(cfg.train_corpus.as_ref().unwrap())?;
    let test_corpus = read_corpus(cfg.test_corpus.as_ref().unwrap())?;
    let clusters = clusters(&cfg, &train_corpus)?;
    let rows = ablate(&train_corpus, &test_corpus, &clusters, &lexicons(&cfg)?, &cfg.train_config()?)?;
    let table = ablation_table(&rows);
    write_json(&dir.join("ablation.json"), &rows)?;
    fs::write(dir.join("ablation.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn cmd_cv(args: &RunArgs, k: Option<usize>) -> Result<()> {
    let mut cfg = resolve_config(
        args,
        Needs {
            train: true,
            output: true,
            ..Needs::default()
        },
    )?;
    if let Some(k) = k {
        cfg.cv_k = k;
        cfg.validate(Needs::default())?;
    }
    let dir = output_dir(&cfg)?;
    let corpus = read_corpus(cfg.train_corpus.as_ref().unwrap())?;
    let clusters = clusters(&cfg, &corpus)?;
    let report = cross_validate(&corpus, cfg.cv_k, &clusters, &lexicons(&cfg)?, &cfg.train_config()?)?;
    write_json(&dir.join("cv.json"), &report)?;
    for f in &report.folds {
        println!(
            "fold {:>2}: {}/{} correct (C = {}, gamma = {})",
            f.fold, f.report.n_correct, f.report.n_abstracts, f.params.cost, f.params.gamma
        );
    }
    println!("mean accuracy over {} folds: {:.4}", report.k, report.mean_accuracy);
    Ok(())
}

fn cmd_cluster(embeddings: &Path, k: usize, seed: u64, normalize: bool, output: &Path) -> Result<()> {
    let table = load_embeddings(embeddings).with_context(|| format!("loading embeddings {}", embeddings.display()))?;
    let model = kmeans(
        &table,
        &KMeansOptions {
            k,
            seed,
            normalize,
            ..KMeansOptions::default()
        },
    )?;
    model.save(output)?;
    println!("clustered {} words into {k} clusters", table.len());
    Ok(())
}

#[derive(Serialize)]
struct ExtractLine {
    #[serde(flatten)]
    candidate: CandidateRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    features: Option<Vec<NamedFeature>>,
}

fn cmd_extract(
    corpus: &[PathBuf],
    plain: bool,
    min_value: u64,
    dump_features: bool,
    model: Option<&Path>,
    output: Option<&Path>,
) -> Result<()> {
    let corpus = read_corpora(corpus, plain)?;
    let space = match model {
        Some(p) => Some(SvmModel::load(p).with_context(|| format!("loading model {}", p.display()))?.space),
        None if dump_features => Some(FeatureSpace {
            groups: FeatureGroups::all(),
            min_value,
            vocabulary: Default::default(),
            scaling: Default::default(),
            lexicons: Lexicons::default(),
            clusters: ClusterModel::empty(),
        }),
        None => None,
    };
    let mut w = open_output(output)?;
    for a in &corpus {
        let lines: Vec<ExtractLine> = match (&space, dump_features) {
            (Some(space), true) => space
                .named_features(a)
                .into_iter()
                .map(|(c, f)| ExtractLine {
                    candidate: CandidateRecord::from(&c),
                    features: Some(f),
                })
                .collect(),
            _ => extract_candidates_with(a, space.as_ref().map_or(min_value, |s| s.min_value))
                .iter()
                .map(|c| ExtractLine {
                    candidate: CandidateRecord::from(c),
                    features: None,
                })
                .collect(),
        };
        for line in lines {
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_embed_train(corpus: &[PathBuf], plain: bool, opts: &SkipGramOptions, output: &Path) -> Result<()> {
    let corpus = read_corpora(corpus, plain)?;
    let table = train_skipgram(&token_sentences(&corpus), opts)?;
    table.save(output)?;
    println!("trained {} vectors of dimension {}", table.len(), table.dimension);
    Ok(())
}

fn cmd_synth(train: usize, test: usize, seed: u64, out: &Path) -> Result<()> {
    let opts = SynthOptions {
        seed,
        ..SynthOptions::default()
    };
    let (train_corpus, test_corpus) = generate_split(train, test, opts)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    save_corpus(out.join("train.jsonl"), &train_corpus)?;
    save_corpus(out.join("test.jsonl"), &test_corpus)?;
    println!("wrote {train} training and {test} test abstracts to {}", out.display());
    Ok(())
}
