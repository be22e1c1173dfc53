use super::kernel::{KernelCache, KernelParams, SqDistMatrix};
use super::model::{SvmModel, TrainingSet};
use super::platt::{platt_fit, Platt};
use super::smo::{bounds, solve, SmoOptions};
use crate::features::FeatureVector;
use crate::{Error, Result};

/// SVM plus calibration fitted on a subset of a point set.
#[derive(Debug, Clone)]
pub(crate) struct SubsetFit {
    /// `(point index, a_i y_i)` for every support vector, by point index.
    pub coefs: Vec<(usize, f64)>,
    pub bias: f64,
    pub platt: Platt,
    pub iterations: usize,
    pub converged: bool,
}

impl SubsetFit {
    pub fn decision(&self, points: &[FeatureVector], distances: Option<&SqDistMatrix>, gamma: f64, j: usize) -> f64 {
        let mut sum = 0.0;
        for &(i, c) in &self.coefs {
            let d = match distances {
                Some(m) => m.get(i, j),
                None => points[i].sq_dist(&points[j]),
            };
            sum += c * (-gamma * d).exp();
        }
        sum + self.bias
    }

    pub fn log_odds(&self, points: &[FeatureVector], distances: Option<&SqDistMatrix>, gamma: f64, j: usize) -> f64 {
        self.platt.log_odds(self.decision(points, distances, gamma, j))
    }
}

pub(crate) fn fit_subset(
    points: &[FeatureVector],
    labels: &[bool],
    distances: Option<&SqDistMatrix>,
    subset: Vec<usize>,
    params: KernelParams,
    options: &SmoOptions,
) -> Result<SubsetFit> {
    params.validate()?;
    let sub_labels: Vec<bool> = subset.iter().map(|&i| labels[i]).collect();
    if !sub_labels.iter().any(|&l| l) || sub_labels.iter().all(|&l| l) {
        return Err(Error::SingleClass);
    }
    let cost = bounds(&sub_labels, params.cost, options.positive_weight);
    let mut cache = KernelCache::new(points, distances, Some(subset.clone()), params.gamma, options.cache_bytes);
    let solution = solve(&mut cache, &sub_labels, &cost, options);
    let coefs: Vec<(usize, f64)> = subset
        .iter()
        .zip(&solution.alpha)
        .zip(&sub_labels)
        .filter(|((_, &a), _)| a > 0.0)
        .map(|((&i, &a), &l)| (i, if l { a } else { -a }))
        .collect();
    let mut fit = SubsetFit {
        coefs,
        bias: solution.bias,
        platt: Platt { a: -1.0, b: 0.0 },
        iterations: solution.iterations,
        converged: solution.converged,
    };
    let decisions: Vec<f64> = subset
        .iter()
        .map(|&j| fit.decision(points, distances, params.gamma, j))
        .collect();
    fit.platt = platt_fit(&decisions, &sub_labels)?;
    Ok(fit)
}

/// Trains the final classifier on every candidate of `set` and calibrates
/// it on the in-sample decision values.
pub fn train_model(set: &TrainingSet, params: KernelParams, options: &SmoOptions) -> Result<SvmModel> {
    train_model_with(set, None, params, options)
}

pub(crate) fn train_model_with(
    set: &TrainingSet,
    distances: Option<&SqDistMatrix>,
    params: KernelParams,
    options: &SmoOptions,
) -> Result<SvmModel> {
    let fit = fit_subset(&set.vectors, &set.labels, distances, (0..set.len()).collect(), params, options)?;
    Ok(SvmModel {
        params,
        support_vectors: fit.coefs.iter().map(|&(i, _)| set.vectors[i].clone()).collect(),
        dual_coefs: fit.coefs.iter().map(|&(_, c)| c).collect(),
        bias: fit.bias,
        platt: fit.platt,
        space: set.space.clone(),
    })
}
