//! Sequential minimal optimization for the C-SVC dual
//!
//! ```text
//! max  sum(a) - 1/2 a'Qa   s.t.  y'a = 0,  0 <= a_i <= C_i,   Q_ij = y_i y_j K_ij
//! ```
//!
//! using maximal-violating-pair selection for the first index and
//! second-order (objective decrease) selection for the second.

use serde::{Deserialize, Serialize};

use super::kernel::{KernelCache, KernelParams};
use crate::features::FeatureVector;
use crate::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoOptions {
    /// Stop when the maximal KKT violation `m(a) - M(a)` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Multiplier on C for positive examples.
    pub positive_weight: f64,
    pub cache_bytes: usize,
    /// Record the dual objective after every pair update.
    #[serde(skip)]
    pub trace: bool,
}

impl Default for SmoOptions {
    fn default() -> Self {
        SmoOptions {
            tol: 1e-3,
            max_iter: 200_000,
            positive_weight: 1.0,
            cache_bytes: 256 << 20,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Intercept of `f(x) = sum_i a_i y_i K(x_i, x) + bias`.
    pub bias: f64,
    /// Gradient of `1/2 a'Qa - sum(a)`.
    pub gradient: Vec<f64>,
    /// Dual objective `sum(a) - 1/2 a'Qa`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

/// Trained kernel machine without probability calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSvm {
    pub params: KernelParams,
    pub support_vectors: Vec<FeatureVector>,
    /// `a_i y_i` per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    /// Indices of the support vectors in the training data.
    pub support_indices: Vec<usize>,
    pub solution: SmoSolution,
}

impl RawSvm {
    pub fn decision_value(&self, x: &FeatureVector) -> f64 {
        decision_value(&self.support_vectors, &self.dual_coefs, self.bias, self.params.gamma, x)
    }
}

pub(crate) fn decision_value(
    support_vectors: &[FeatureVector],
    coefs: &[f64],
    bias: f64,
    gamma: f64,
    x: &FeatureVector,
) -> f64 {
    let mut sum = 0.0;
    for (sv, c) in support_vectors.iter().zip(coefs) {
        sum += c * (-gamma * sv.sq_dist(x)).exp();
    }
    sum + bias
}

fn sign(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

/// Per-example upper bounds.
pub(crate) fn bounds(labels: &[bool], cost: f64, positive_weight: f64) -> Vec<f64> {
    labels
        .iter()
        .map(|&l| if l { cost * positive_weight } else { cost })
        .collect()
}

pub fn train_smo(data: &[FeatureVector], labels: &[bool], params: KernelParams, options: &SmoOptions) -> Result<RawSvm> {
    params.validate()?;
    if data.len() != labels.len() {
        return Err(Error::invalid("data and labels differ in length"));
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(Error::SingleClass);
    }
    let mut cache = KernelCache::new(data, None, None, params.gamma, options.cache_bytes);
    let c = bounds(labels, params.cost, options.positive_weight);
    let solution = solve(&mut cache, labels, &c, options);
    let support_indices: Vec<usize> = (0..data.len()).filter(|&i| solution.alpha[i] > 0.0).collect();
    Ok(RawSvm {
        params,
        support_vectors: support_indices.iter().map(|&i| data[i].clone()).collect(),
        dual_coefs: support_indices
            .iter()
            .map(|&i| solution.alpha[i] * sign(labels[i]))
            .collect(),
        bias: solution.bias,
        support_indices,
        solution,
    })
}

/// Solves the dual over the points of `kernel`. `labels` and `cost` are
/// indexed like the cache's subset.
pub(crate) fn solve(kernel: &mut KernelCache<'_>, labels: &[bool], cost: &[f64], options: &SmoOptions) -> SmoSolution {
    let n = kernel.len();
    let y: Vec<f64> = labels.iter().map(|&l| sign(l)).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    let at_upper = |a: f64, c: f64| a >= c;
    let at_lower = |a: f64| a <= 0.0;

    while iterations < options.max_iter {
        // First index: maximal violation of -y_t G_t over I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut first = None;
        for t in 0..n {
            let up = if y[t] > 0.0 { !at_upper(alpha[t], cost[t]) } else { !at_lower(alpha[t]) };
            if up && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                first = Some(t);
            }
        }
        let Some(i) = first else {
            converged = true;
            break;
        };
        let ki = kernel.row(i);

        // Second index: largest objective decrease over I_low.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut second = None;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let low = if y[t] > 0.0 { !at_lower(alpha[t]) } else { !at_upper(alpha[t], cost[t]) };
            if !low {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            let diff = gmax + v;
            if diff > 0.0 {
                let quad = ki[i] + kernel_diag() - 2.0 * ki[t];
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(diff * diff) / quad;
                if obj < best {
                    best = obj;
                    second = Some(t);
                }
            }
        }
        let Some(j) = second.filter(|_| gmax + gmax2 >= options.tol) else {
            converged = true;
            break;
        };
        iterations += 1;
        let kj = kernel.row(j);

        let (ci, cj) = (cost[i], cost[j]);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let mut ai = old_ai;
        let mut aj = old_aj;
        let quad = ki[i] + kj[j] - 2.0 * ki[j];
        let quad = if quad > 0.0 { quad } else { TAU };
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let dai = ai - old_ai;
        let daj = aj - old_aj;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
        }
        if options.trace {
            trace.push(dual_objective(&alpha, &grad));
        }
    }
    if !converged {
        log::warn!("SMO stopped after {} iterations without reaching tol {}", iterations, options.tol);
    }

    let bias = -rho(&alpha, &grad, &y, cost);
    SmoSolution {
        objective: dual_objective(&alpha, &grad),
        alpha,
        bias,
        gradient: grad,
        iterations,
        converged,
        objective_trace: trace,
    }
}

/// RBF kernels have a unit diagonal.
#[inline]
fn kernel_diag() -> f64 {
    1.0
}

/// `sum(a) - 1/2 a'Qa`, using `G = Qa - 1`.
fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (1.0 - g)).sum::<f64>()
}

/// Threshold: the mean of `y_i G_i` over free variables, or the midpoint of
/// the feasible interval when none is free.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], cost: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= cost[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(pairs: &[(u32, f64)]) -> FeatureVector {
        FeatureVector::from_pairs(pairs.to_vec())
    }

    #[test]
    fn two_points() {
        let data = vec![v(&[(0, 1.0)]), v(&[(1, 1.0)])];
        let labels = vec![true, false];
        let svm = train_smo(&data, &labels, KernelParams::new(10.0, 0.5).unwrap(), &SmoOptions::default()).unwrap();
        assert_eq!(svm.support_indices, vec![0, 1]);
        assert!(svm.decision_value(&data[0]) > 0.0);
        assert!(svm.decision_value(&data[1]) < 0.0);
    }

    #[test]
    fn xor_is_separated() {
        let data = vec![
            v(&[(0, 0.0), (1, 0.0)]),
            v(&[(0, 1.0), (1, 1.0)]),
            v(&[(0, 1.0)]),
            v(&[(1, 1.0)]),
        ];
        let labels = vec![true, true, false, false];
        let svm = train_smo(&data, &labels, KernelParams::new(100.0, 2.0).unwrap(), &SmoOptions::default()).unwrap();
        for (x, &l) in data.iter().zip(&labels) {
            assert_eq!(svm.decision_value(x) > 0.0, l);
        }
    }

    #[test]
    fn single_class_rejected() {
        let data = vec![v(&[(0, 1.0)]), v(&[(1, 1.0)])];
        let r = train_smo(&data, &[true, true], KernelParams::new(1.0, 1.0).unwrap(), &SmoOptions::default());
        assert!(matches!(r, Err(Error::SingleClass)));
    }

    #[test]
    fn objective_never_decreases() {
        let data: Vec<FeatureVector> = (0..12)
            .map(|i| v(&[((i % 5) as u32, 1.0), (9, (i as f64 * 0.37).sin())]))
            .collect();
        let labels: Vec<bool> = (0..12).map(|i| i % 3 == 0).collect();
        let opts = SmoOptions { trace: true, tol: 1e-8, ..Default::default() };
        let svm = train_smo(&data, &labels, KernelParams::new(3.0, 0.7).unwrap(), &opts).unwrap();
        let tr = &svm.solution.objective_trace;
        assert!(!tr.is_empty());
        for w in tr.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{} -> {}", w[0], w[1]);
        }
        let sum: f64 = svm.dual_coefs.iter().sum();
        assert!(sum.abs() < 1e-8);
    }
}
