use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{KernelParams, SqDistMatrix};
use super::model::{SvmModel, TrainingSet};
use super::smo::SmoOptions;
use super::train::{fit_subset, train_model_with};
use crate::pipeline::decode;
use crate::{seed, Error, Result};

/// Hyperparameter grid; both axes are tried in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub costs: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for GridSpec {
    /// `C = 2^-5, 2^-3, ..., 2^15` and `gamma = 2^-15, 2^-13, ..., 2^3`.
    fn default() -> Self {
        GridSpec {
            costs: (-5..=15).step_by(2).map(|e| 2f64.powi(e)).collect(),
            gammas: (-15..=3).step_by(2).map(|e| 2f64.powi(e)).collect(),
        }
    }
}

impl GridSpec {
    pub fn single(cost: f64, gamma: f64) -> Self {
        GridSpec {
            costs: vec![cost],
            gammas: vec![gamma],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.costs.is_empty() || self.gammas.is_empty() {
            return Err(Error::invalid("grid needs at least one C and one gamma"));
        }
        for &c in &self.costs {
            KernelParams::new(c, 1.0)?;
        }
        for &g in &self.gammas {
            KernelParams::new(1.0, g)?;
        }
        Ok(())
    }

    fn cells(&self) -> Vec<KernelParams> {
        let mut costs = self.costs.clone();
        let mut gammas = self.gammas.clone();
        costs.sort_by(f64::total_cmp);
        costs.dedup();
        gammas.sort_by(f64::total_cmp);
        gammas.dedup();
        costs
            .iter()
            .flat_map(|&cost| gammas.iter().map(move |&gamma| KernelParams { cost, gamma }))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridOptions {
    pub smo: SmoOptions,
    /// Score cells by k-fold cross-validation over abstracts instead of
    /// in-sample accuracy.
    pub cv_folds: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub cost: f64,
    pub gamma: f64,
    /// Abstract-level accuracy.
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub best: KernelParams,
    pub best_accuracy: f64,
    pub cells: Vec<GridCell>,
}

/// Assigns every abstract to one of `k` folds, balanced and seeded.
pub fn abstract_folds(n: usize, k: usize, global_seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(global_seed, "folds"));
    order.shuffle(&mut rng);
    let mut fold = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        fold[i] = rank % k;
    }
    fold
}

fn score_cell(
    set: &TrainingSet,
    distances: &SqDistMatrix,
    params: KernelParams,
    options: &GridOptions,
) -> Result<GridCell> {
    let n_abs = set.abstracts.len();
    let mut correct = 0;
    let mut iterations = 0;
    let mut converged = true;
    let folds = match options.cv_folds {
        Some(k) => abstract_folds(n_abs, k, options.seed),
        None => vec![0; n_abs],
    };
    let k = options.cv_folds.unwrap_or(1);
    for f in 0..k {
        let held: Vec<usize> = (0..n_abs).filter(|&a| folds[a] == f).collect();
        let train: Vec<usize> = if options.cv_folds.is_some() {
            (0..n_abs)
                .filter(|&a| folds[a] != f)
                .flat_map(|a| set.abstracts[a].clone())
                .collect()
        } else {
            (0..set.len()).collect()
        };
        let fit = fit_subset(&set.vectors, &set.labels, Some(distances), train, params, &options.smo)?;
        iterations += fit.iterations;
        converged &= fit.converged;
        for a in held {
            let range = set.abstracts[a].clone();
            let scores: Vec<f64> = range
                .clone()
                .map(|j| fit.log_odds(&set.vectors, Some(distances), params.gamma, j))
                .collect();
            if let Some(best) = decode(&scores) {
                if set.candidates[range.start + best].value == set.gold[a] {
                    correct += 1;
                }
            }
        }
    }
    Ok(GridCell {
        cost: params.cost,
        gamma: params.gamma,
        accuracy: if n_abs == 0 { 0.0 } else { correct as f64 / n_abs as f64 },
        correct,
        total: n_abs,
        converged,
        iterations,
    })
}

/// Scores every cell of `spec`; the best cell has the highest accuracy, ties
/// going to smaller C and then smaller gamma.
pub fn grid_search(set: &TrainingSet, spec: &GridSpec, options: &GridOptions) -> Result<GridOutcome> {
    spec.validate()?;
    if let Some(k) = options.cv_folds {
        if k < 2 || k > set.abstracts.len() {
            return Err(Error::invalid(format!(
                "cv folds must be between 2 and the number of abstracts ({}), got {k}",
                set.abstracts.len()
            )));
        }
    }
    let distances = SqDistMatrix::new(&set.vectors);
    let cells: Vec<GridCell> = spec
        .cells()
        .into_par_iter()
        .map(|p| score_cell(set, &distances, p, options))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, c) in cells.iter().enumerate() {
        if c.accuracy > cells[best].accuracy {
            best = i;
        }
        log::debug!("C={} gamma={} accuracy={:.4}", c.cost, c.gamma, c.accuracy);
    }
    Ok(GridOutcome {
        best: KernelParams {
            cost: cells[best].cost,
            gamma: cells[best].gamma,
        },
        best_accuracy: cells[best].accuracy,
        cells,
    })
}

/// Grid search followed by a final fit at the chosen parameters.
pub fn train_with_grid(set: &TrainingSet, spec: &GridSpec, options: &GridOptions) -> Result<(SvmModel, GridOutcome)> {
    let outcome = grid_search(set, spec, options)?;
    let model = train_model_with(set, None, outcome.best, &options.smo)?;
    Ok((model, outcome))
}
