use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub cost: f64,
    pub gamma: f64,
}

impl KernelParams {
    pub fn new(cost: f64, gamma: f64) -> Result<Self> {
        let p = KernelParams { cost, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost > 0.0 && self.cost.is_finite() && self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!(
                "cost and gamma must be positive (got C={}, gamma={})",
                self.cost, self.gamma
            )));
        }
        Ok(())
    }
}

/// `exp(-gamma * ||x - y||^2)`.
pub fn rbf(x: &FeatureVector, y: &FeatureVector, gamma: f64) -> f64 {
    (-gamma * x.sq_dist(y)).exp()
}

/// Dense matrix of pairwise squared distances. It does not depend on gamma,
/// so one matrix serves every cell of a grid search.
#[derive(Debug, Clone)]
pub struct SqDistMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SqDistMatrix {
    pub fn new(points: &[FeatureVector]) -> Self {
        let n = points.len();
        let data = points
            .par_iter()
            .flat_map_iter(|p| points.iter().map(move |q| p.sq_dist(q)))
            .collect();
        SqDistMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn bytes(n: usize) -> usize {
        n * n * std::mem::size_of::<f64>()
    }
}

/// Row cache over the kernel matrix of a subset of points, evicting the least
/// recently used row once the byte budget is exhausted. Rows are computed
/// deterministically, so the budget affects speed only.
pub struct KernelCache<'a> {
    points: &'a [FeatureVector],
    distances: Option<&'a SqDistMatrix>,
    subset: Vec<usize>,
    gamma: f64,
    capacity: usize,
    rows: HashMap<usize, (Arc<[f64]>, u64)>,
    clock: u64,
}

impl<'a> KernelCache<'a> {
    /// `subset` selects (and orders) the points of the sub-problem; `None`
    /// means all points.
    pub fn new(
        points: &'a [FeatureVector],
        distances: Option<&'a SqDistMatrix>,
        subset: Option<Vec<usize>>,
        gamma: f64,
        budget_bytes: usize,
    ) -> Self {
        let subset = subset.unwrap_or_else(|| (0..points.len()).collect());
        let row_bytes = (subset.len() * std::mem::size_of::<f64>()).max(1);
        KernelCache {
            points,
            distances,
            capacity: (budget_bytes / row_bytes).max(2),
            subset,
            gamma,
            rows: HashMap::new(),
            clock: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.subset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subset.is_empty()
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    fn sq_dist(&self, a: usize, b: usize) -> f64 {
        match self.distances {
            Some(m) => m.get(a, b),
            None => self.points[a].sq_dist(&self.points[b]),
        }
    }

    /// Kernel values between the base point `base` and every subset point.
    pub fn row_for_point(&self, base: usize) -> Vec<f64> {
        self.subset
            .iter()
            .map(|&b| (-self.gamma * self.sq_dist(base, b)).exp())
            .collect()
    }

    pub fn row(&mut self, i: usize) -> Arc<[f64]> {
        self.clock += 1;
        if let Some((row, stamp)) = self.rows.get_mut(&i) {
            *stamp = self.clock;
            return row.clone();
        }
        let row: Arc<[f64]> = self.row_for_point(self.subset[i]).into();
        if self.rows.len() >= self.capacity {
            let oldest = self.rows.iter().min_by_key(|(_, (_, s))| *s).map(|(k, _)| *k).unwrap();
            self.rows.remove(&oldest);
        }
        self.rows.insert(i, (row.clone(), self.clock));
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(pairs: &[(u32, f64)]) -> FeatureVector {
        FeatureVector::from_pairs(pairs.to_vec())
    }

    #[test]
    fn rbf_values() {
        let x = v(&[(0, 1.0)]);
        let y = v(&[(1, 1.0)]);
        assert_eq!(rbf(&x, &x, 3.0), 1.0);
        assert!((rbf(&x, &y, 0.5) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(rbf(&x, &y, 500.0) < 1e-300);
    }

    #[test]
    fn params_must_be_positive() {
        assert!(KernelParams::new(1.0, 0.5).is_ok());
        assert!(KernelParams::new(0.0, 0.5).is_err());
        assert!(KernelParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn cache_budget_does_not_change_rows() {
        let pts: Vec<FeatureVector> = (0..6).map(|i| v(&[(i, 1.0), (7, i as f64)])).collect();
        let m = SqDistMatrix::new(&pts);
        let mut big = KernelCache::new(&pts, Some(&m), None, 0.3, 1 << 20);
        let mut tiny = KernelCache::new(&pts, None, None, 0.3, 0);
        for i in [0, 3, 5, 1, 0, 4, 2, 3] {
            assert_eq!(&*big.row(i), &*tiny.row(i));
        }
        assert!(tiny.rows.len() <= 2);
    }
}
