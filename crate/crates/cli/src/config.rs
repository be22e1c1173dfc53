use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use trialsize::candidates::DEFAULT_MIN_VALUE;
use trialsize::features::{feature_groups, FeatureGroup};
use trialsize::pipeline::TrainConfig;
use trialsize::svm::{GridOptions, GridSpec, SmoOptions};

/// Skip-gram settings; the seed comes from the run's global seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dimension: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub learning_rate: f64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dimension: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 1,
            learning_rate: 0.025,
        }
    }
}

/// Where word vectors for clustering come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum EmbeddingSource {
    /// No word clusters; every cluster feature takes the sentinel value.
    None,
    /// Pre-trained vectors in word2vec text format.
    Path { path: PathBuf },
    /// Skip-gram trained on the unlabeled corpus, or on the training corpus
    /// when none is given.
    Train(SkipGramConfig),
}

impl Default for EmbeddingSource {
    fn default() -> Self {
        EmbeddingSource::Train(SkipGramConfig::default())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconPaths {
    pub population: Option<PathBuf>,
    pub temporal: Option<PathBuf>,
    pub likely_labels: Option<PathBuf>,
}

/// Experiment configuration. Every field has a default, so `{}` is a valid
/// file; command-line flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train_corpus: Option<PathBuf>,
    pub test_corpus: Option<PathBuf>,
    pub unlabeled_corpus: Option<PathBuf>,
    pub embeddings: EmbeddingSource,
    /// Precomputed cluster model; takes precedence over `embeddings`.
    pub clusters: Option<PathBuf>,
    pub cluster_k: usize,
    pub cluster_normalize: bool,
    pub lexicons: LexiconPaths,
    pub feature_groups: Vec<FeatureGroup>,
    pub min_value: u64,
    pub grid: GridSpec,
    pub smo: SmoOptions,
    /// Score grid cells by k-fold cross-validation instead of in-sample
    /// accuracy.
    pub grid_cv_folds: Option<usize>,
    /// Number of folds for the `cv` command.
    pub cv_k: usize,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train_corpus: None,
            test_corpus: None,
            unlabeled_corpus: None,
            embeddings: EmbeddingSource::default(),
            clusters: None,
            cluster_k: 500,
            cluster_normalize: false,
            lexicons: LexiconPaths::default(),
            feature_groups: FeatureGroup::ALL.to_vec(),
            min_value: DEFAULT_MIN_VALUE,
            grid: GridSpec::default(),
            smo: SmoOptions::default(),
            grid_cv_folds: None,
            cv_k: 10,
            output_dir: None,
            seed: 0,
        }
    }
}

/// Inputs a command needs beyond the always-checked fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub train: bool,
    pub test: bool,
    pub output: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Checks the whole configuration and reports every problem at once.
    pub fn validate(&self, needs: Needs) -> Result<()> {
        let mut problems = Vec::new();
        let mut check_path = |name: &str, p: &Option<PathBuf>, required: bool| match p {
            Some(p) if !p.exists() => problems.push(format!("{name}: {} does not exist", p.display())),
            None if required => problems.push(format!("{name} is required")),
            _ => {}
        };
        check_path("train_corpus", &self.train_corpus, needs.train);
        check_path("test_corpus", &self.test_corpus, needs.test);
        check_path("unlabeled_corpus", &self.unlabeled_corpus, false);
        check_path("clusters", &self.clusters, false);
        check_path("lexicons.population", &self.lexicons.population, false);
        check_path("lexicons.temporal", &self.lexicons.temporal, false);
        check_path("lexicons.likely_labels", &self.lexicons.likely_labels, false);
        if let EmbeddingSource::Path { path } = &self.embeddings {
            check_path("embeddings.path", &Some(path.clone()), true);
        }
        if needs.output && self.output_dir.is_none() {
            problems.push("output_dir is required".into());
        }
        if let EmbeddingSource::Train(sg) = &self.embeddings {
            if sg.dimension < 2 {
                problems.push("embeddings.dimension must be at least 2".into());
            }
            if sg.window == 0 || sg.epochs == 0 {
                problems.push("embeddings.window and embeddings.epochs must be positive".into());
            }
            if sg.learning_rate.is_nan() || sg.learning_rate <= 0.0 {
                problems.push("embeddings.learning_rate must be positive".into());
            }
        }
        if self.cluster_k == 0 {
            problems.push("cluster_k must be positive".into());
        }
        if let Err(e) = feature_groups(&self.feature_groups) {
            problems.push(format!("feature_groups: {e}"));
        }
        if let Err(e) = self.grid.validate() {
            problems.push(format!("grid: {e}"));
        }
        if self.smo.tol.is_nan() || self.smo.tol <= 0.0 || self.smo.max_iter == 0 {
            problems.push("smo.tol and smo.max_iter must be positive".into());
        }
        if self.smo.positive_weight.is_nan() || self.smo.positive_weight <= 0.0 {
            problems.push("smo.positive_weight must be positive".into());
        }
        if matches!(self.grid_cv_folds, Some(k) if k < 2) {
            problems.push("grid_cv_folds must be at least 2".into());
        }
        if self.cv_k < 2 {
            problems.push("cv_k must be at least 2".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            bail!("invalid configuration:\n  - {}", problems.join("\n  - "))
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            groups: feature_groups(&self.feature_groups)?,
            min_value: self.min_value,
            grid: self.grid.clone(),
            grid_options: GridOptions {
                smo: self.smo,
                cv_folds: self.grid_cv_folds,
                seed: self.seed,
            },
        })
    }

    pub fn write_effective(&self, dir: &Path) -> Result<()> {
        let path = dir.join("config.json");
        let json = serde_json::to_string_pretty(self)?;
        fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
