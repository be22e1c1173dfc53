//! Decoding, evaluation, ablation and cross-validation.

mod report;
mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::{Candidate, CandidateRecord, DEFAULT_MIN_VALUE};
use crate::corpus::Abstract;
use crate::embeddings::ClusterModel;
use crate::features::{FeatureGroups, Lexicons};
use crate::svm::{abstract_folds, train_with_grid, GridOptions, GridOutcome, GridSpec, KernelParams, SvmModel, TrainingSet};
use crate::{Error, Result};

pub use report::{ablation_table, evaluation_table, PredictionLine, RunnerUp};
pub use stats::{beta_quantile, clopper_pearson, format_accuracy_ci, format_percent, ln_gamma, regularized_beta};

pub const CONFIDENCE: f64 = 0.95;

/// Index of the highest score, ties going to the earliest. `None` for an
/// empty slice.
pub fn decode(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some(b) if s <= scores[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub abstract_id: String,
    pub predicted_value: Option<u64>,
    pub winning_candidate: Option<Candidate>,
    pub probability: Option<f64>,
    /// Every candidate in document order with its calibrated probability.
    pub candidate_probabilities: Vec<(Candidate, f64)>,
    /// Calibrated log-odds, parallel to `candidate_probabilities`.
    pub log_odds: Vec<f64>,
}

impl Prediction {
    fn winner(&self) -> Option<usize> {
        decode(&self.log_odds)
    }

    /// Best candidate other than the winner.
    pub fn runner_up(&self) -> Option<(&Candidate, f64)> {
        let w = self.winner()?;
        let rest: Vec<f64> = self
            .log_odds
            .iter()
            .enumerate()
            .map(|(i, &s)| if i == w { f64::NEG_INFINITY } else { s })
            .collect();
        let r = decode(&rest).filter(|&r| r != w)?;
        let (c, p) = &self.candidate_probabilities[r];
        Some((c, *p))
    }
}

/// Scores every candidate of `abstract_` and picks the most probable one.
pub fn predict_size(model: &SvmModel, abstract_: &Abstract) -> Prediction {
    let mut candidate_probabilities = Vec::new();
    let mut log_odds = Vec::new();
    for (c, v) in model.space.encode(abstract_) {
        let f = model.decision_value(&v);
        log_odds.push(model.platt.log_odds(f));
        candidate_probabilities.push((c, model.platt.probability(f)));
    }
    let winner = decode(&log_odds);
    Prediction {
        abstract_id: abstract_.id.clone(),
        predicted_value: winner.map(|w| candidate_probabilities[w].0.value),
        winning_candidate: winner.map(|w| candidate_probabilities[w].0.clone()),
        probability: winner.map(|w| candidate_probabilities[w].1),
        candidate_probabilities,
        log_odds,
    }
}

/// Predictions for a whole corpus, in corpus order.
pub fn predict_corpus(model: &SvmModel, corpus: &[Abstract]) -> Vec<Prediction> {
    corpus.par_iter().map(|a| predict_size(model, a)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractOutcome {
    pub id: String,
    pub gold: u64,
    pub predicted: Option<u64>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_abstracts: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub per_abstract: Vec<AbstractOutcome>,
}

impl EvalReport {
    pub fn from_outcomes(per_abstract: Vec<AbstractOutcome>) -> Result<EvalReport> {
        let n = per_abstract.len();
        let k = per_abstract.iter().filter(|o| o.correct).count();
        let (ci_low, ci_high) = if n == 0 {
            (0.0, 1.0)
        } else {
            clopper_pearson(k as u64, n as u64, CONFIDENCE)?
        };
        Ok(EvalReport {
            n_abstracts: n,
            n_correct: k,
            accuracy: if n == 0 { 0.0 } else { k as f64 / n as f64 },
            ci_low,
            ci_high,
            per_abstract,
        })
    }

    /// `"88 (76 – 95)"`.
    pub fn display(&self) -> String {
        format_accuracy_ci(self.accuracy, self.ci_low, self.ci_high)
    }
}

fn gold_sizes(corpus: &[Abstract]) -> Result<Vec<u64>> {
    corpus
        .iter()
        .map(|a| a.gold_size.ok_or_else(|| Error::MissingGold(a.id.clone())))
        .collect()
}

/// Scores predictions against gold; an abstract without a prediction counts
/// as an error.
pub fn score_predictions(corpus: &[Abstract], predictions: &[Prediction]) -> Result<EvalReport> {
    let gold = gold_sizes(corpus)?;
    let outcomes = corpus
        .iter()
        .zip(gold)
        .zip(predictions)
        .map(|((a, g), p)| AbstractOutcome {
            id: a.id.clone(),
            gold: g,
            predicted: p.predicted_value,
            correct: p.predicted_value == Some(g),
        })
        .collect();
    EvalReport::from_outcomes(outcomes)
}

pub fn evaluate(model: &SvmModel, corpus: &[Abstract]) -> Result<EvalReport> {
    gold_sizes(corpus)?;
    score_predictions(corpus, &predict_corpus(model, corpus))
}

/// Settings shared by every training run of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub groups: FeatureGroups,
    pub min_value: u64,
    pub grid: GridSpec,
    pub grid_options: GridOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            groups: FeatureGroups::all(),
            min_value: DEFAULT_MIN_VALUE,
            grid: GridSpec::default(),
            grid_options: GridOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: SvmModel,
    pub grid: GridOutcome,
    pub candidate_count: usize,
    pub positive_count: usize,
    pub training_accuracy: f64,
}

/// Builds features, runs the grid search and fits the final model.
pub fn train(corpus: &[Abstract], clusters: &ClusterModel, lexicons: &Lexicons, config: &TrainConfig) -> Result<TrainOutput> {
    let set = TrainingSet::build(
        corpus,
        config.groups.clone(),
        clusters.clone(),
        lexicons.clone(),
        config.min_value,
    )?;
    let (model, grid) = train_with_grid(&set, &config.grid, &config.grid_options)?;
    let training_accuracy = evaluate(&model, corpus)?.accuracy;
    Ok(TrainOutput {
        model,
        candidate_count: set.len(),
        positive_count: set.labels.iter().filter(|&&l| l).count(),
        grid,
        training_accuracy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub groups: FeatureGroups,
    pub params: Option<KernelParams>,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

/// Trains and evaluates once per selection of [`FeatureGroups::ablation_rows`],
/// with a fresh grid search each time. A failing row records its error and
/// the remaining rows still run.
pub fn ablate(
    train_corpus: &[Abstract],
    test_corpus: &[Abstract],
    clusters: &ClusterModel,
    lexicons: &Lexicons,
    config: &TrainConfig,
) -> Result<Vec<AblationRow>> {
    gold_sizes(train_corpus)?;
    gold_sizes(test_corpus)?;
    Ok(FeatureGroups::ablation_rows()
        .into_par_iter()
        .map(|groups| {
            let cfg = TrainConfig {
                groups: groups.clone(),
                ..config.clone()
            };
            let run = train(train_corpus, clusters, lexicons, &cfg)
                .and_then(|out| Ok((out.model.params, evaluate(&out.model, test_corpus)?)));
            match run {
                Ok((params, report)) => AblationRow {
                    label: groups.label(),
                    groups,
                    params: Some(params),
                    report: Some(report),
                    error: None,
                },
                Err(e) => {
                    log::warn!("ablation row {} failed: {e}", groups.label());
                    AblationRow {
                        label: groups.label(),
                        groups,
                        params: None,
                        report: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub params: KernelParams,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub mean_accuracy: f64,
    pub folds: Vec<FoldReport>,
}

/// k-fold cross-validation over abstracts. Folds come from a seeded shuffle,
/// so a fixed seed gives the same assignment on every run.
pub fn cross_validate(
    corpus: &[Abstract],
    k: usize,
    clusters: &ClusterModel,
    lexicons: &Lexicons,
    config: &TrainConfig,
) -> Result<CvReport> {
    if k < 2 {
        return Err(Error::invalid(format!("cross-validation needs k >= 2, got {k}")));
    }
    if k > corpus.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the corpus size {}",
            corpus.len()
        )));
    }
    gold_sizes(corpus)?;
    let assignment = abstract_folds(corpus.len(), k, config.grid_options.seed);
    let folds = (0..k)
        .into_par_iter()
        .map(|f| {
            let (held, rest): (Vec<_>, Vec<_>) = corpus
                .iter()
                .zip(&assignment)
                .partition(|(_, &fold)| fold == f);
            let held: Vec<Abstract> = held.into_iter().map(|(a, _)| a.clone()).collect();
            let rest: Vec<Abstract> = rest.into_iter().map(|(a, _)| a.clone()).collect();
            let out = train(&rest, clusters, lexicons, config)?;
            Ok(FoldReport {
                fold: f,
                params: out.model.params,
                report: evaluate(&out.model, &held)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_accuracy = folds.iter().map(|f| f.report.accuracy).sum::<f64>() / k as f64;
    Ok(CvReport { k, mean_accuracy, folds })
}

impl From<&Prediction> for PredictionLine {
    fn from(p: &Prediction) -> Self {
        PredictionLine {
            id: p.abstract_id.clone(),
            size: p.predicted_value,
            probability: p.probability,
            candidate: p.winning_candidate.as_ref().map(CandidateRecord::from),
            runner_up: p.runner_up().map(|(c, probability)| RunnerUp {
                value: c.value,
                probability,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_ties_go_to_earliest() {
        assert_eq!(decode(&[]), None);
        assert_eq!(decode(&[0.1]), Some(0));
        assert_eq!(decode(&[0.2, 0.5, 0.5, 0.1]), Some(1));
        assert_eq!(decode(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), Some(0));
    }

    #[test]
    fn report_counts_missing_predictions_as_errors() {
        let outcomes = vec![
            AbstractOutcome {
                id: "a".into(),
                gold: 10,
                predicted: Some(10),
                correct: true,
            },
            AbstractOutcome {
                id: "b".into(),
                gold: 20,
                predicted: None,
                correct: false,
            },
        ];
        let r = EvalReport::from_outcomes(outcomes).unwrap();
        assert_eq!(r.n_correct, 1);
        assert_eq!(r.accuracy, 0.5);
        assert!(r.ci_low <= 0.5 && 0.5 <= r.ci_high);
    }

    #[test]
    fn zero_correct_has_zero_lower_bound() {
        let outcomes = (0..5)
            .map(|i| AbstractOutcome {
                id: i.to_string(),
                gold: 10,
                predicted: Some(11),
                correct: false,
            })
            .collect();
        let r = EvalReport::from_outcomes(outcomes).unwrap();
        assert_eq!(r.accuracy, 0.0);
        assert_eq!(r.ci_low, 0.0);
    }
}
