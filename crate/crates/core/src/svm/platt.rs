//! Sigmoid calibration of decision values, `P(y = 1 | f) = 1 / (1 + exp(A f + B))`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

const MAX_ITER: usize = 100;
const MIN_STEP: f64 = 1e-10;
const HESSIAN_RIDGE: f64 = 1e-12;
const GRAD_TOL: f64 = 1e-8;

impl Platt {
    /// Log-odds of the positive class, `-(A f + B)`. Strictly monotone in
    /// the probability, so ranking by it equals ranking by probability.
    pub fn log_odds(&self, decision: f64) -> f64 {
        -(self.a * decision + self.b)
    }

    /// Probability in the open interval (0, 1).
    pub fn probability(&self, decision: f64) -> f64 {
        let z = self.a * decision + self.b;
        let p = if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        };
        p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }
}

/// Smoothed targets `(N+ + 1)/(N+ + 2)` and `1/(N- + 2)`.
pub fn platt_targets(labels: &[bool]) -> Vec<f64> {
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    labels.iter().map(|&l| if l { hi } else { lo }).collect()
}

/// Negative log-likelihood against the smoothed targets.
pub fn platt_objective(decisions: &[f64], targets: &[f64], a: f64, b: f64) -> f64 {
    decisions
        .iter()
        .zip(targets)
        .map(|(&f, &t)| {
            let z = f * a + b;
            if z >= 0.0 {
                t * z + (-z).exp().ln_1p()
            } else {
                (t - 1.0) * z + z.exp().ln_1p()
            }
        })
        .sum()
}

/// Gradient of [`platt_objective`] with respect to `(A, B)`.
pub fn platt_gradient(decisions: &[f64], targets: &[f64], a: f64, b: f64) -> (f64, f64) {
    let mut ga = 0.0;
    let mut gb = 0.0;
    for (&f, &t) in decisions.iter().zip(targets) {
        let p = Platt { a, b }.raw_probability(f);
        ga += f * (t - p);
        gb += t - p;
    }
    (ga, gb)
}

impl Platt {
    fn raw_probability(&self, f: f64) -> f64 {
        let z = f * self.a + self.b;
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

/// Fits `(A, B)` by Newton's method with backtracking line search.
pub fn platt_fit(decisions: &[f64], labels: &[bool]) -> Result<Platt> {
    if decisions.len() != labels.len() {
        return Err(Error::invalid("decision values and labels differ in length"));
    }
    if decisions.iter().any(|f| !f.is_finite()) {
        return Err(Error::invalid("non-finite decision value"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let t = platt_targets(labels);
    let mut a = 0.0;
    let mut b = ((neg as f64 + 1.0) / (pos as f64 + 1.0)).ln();
    let mut fval = platt_objective(decisions, &t, a, b);

    for _ in 0..MAX_ITER {
        let mut h11 = HESSIAN_RIDGE;
        let mut h22 = HESSIAN_RIDGE;
        let mut h21 = 0.0;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for (&f, &ti) in decisions.iter().zip(&t) {
            let p = Platt { a, b }.raw_probability(f);
            let d2 = p * (1.0 - p);
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.hypot(g2) < GRAD_TOL {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut moved = false;
        while step >= MIN_STEP {
            let na = a + step * da;
            let nb = b + step * db;
            let nf = platt_objective(decisions, &t, na, nb);
            if nf < fval + 1e-4 * step * gd {
                moved = na != a || nb != b;
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if !moved {
            break;
        }
    }
    Ok(Platt { a, b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_values_give_negative_slope() {
        let f = [-2.0, -1.5, -1.0, 1.0, 1.5, 2.0];
        let y = [false, false, false, true, true, true];
        let p = platt_fit(&f, &y).unwrap();
        assert!(p.a < 0.0);
        assert!(p.probability(2.0) > 0.5);
        assert!(p.probability(-2.0) < 0.5);
        let (ga, gb) = platt_gradient(&f, &platt_targets(&y), p.a, p.b);
        assert!(ga.hypot(gb) < 1e-6);
    }

    #[test]
    fn probability_is_open_interval() {
        let p = Platt { a: -50.0, b: 0.0 };
        assert!(p.probability(100.0) < 1.0);
        assert!(p.probability(-100.0) > 0.0);
        let flat = Platt { a: 0.0, b: 0.3 };
        assert_eq!(flat.probability(-4.0), flat.probability(9.0));
    }

    #[test]
    fn errors() {
        assert!(platt_fit(&[1.0, f64::NAN], &[true, false]).is_err());
        assert!(matches!(platt_fit(&[1.0, 2.0], &[true, true]), Err(Error::SingleClass)));
    }
}
