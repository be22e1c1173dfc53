use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ClusterModel, EmbeddingTable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once no centroid moves further than this.
    pub tol: f64,
    /// Length-normalize vectors first (cosine-equivalent clustering).
    pub normalize: bool,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            k: 500,
            seed: 0,
            max_iters: 100,
            tol: 1e-6,
            normalize: false,
        }
    }
}

/// Outcome of Lloyd's algorithm on a point set.
#[derive(Debug, Clone)]
pub struct KMeansRun {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step; the last
    /// entry belongs to the final assignment.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansRun {
    pub fn sse(&self) -> f64 {
        self.sse_history.last().copied().unwrap_or(0.0)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, ties to the lowest id.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (id, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (id, d);
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let pairs: Vec<(usize, f64)> = points.par_iter().map(|p| nearest(p, centroids)).collect();
    let sse = pairs.iter().map(|(_, d)| d).sum();
    (pairs.into_iter().map(|(l, _)| l).collect(), sse)
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave the target just above the final sum.
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // All remaining points coincide with a centroid.
            chosen.iter().position(|c| !c).unwrap()
        };
        chosen[pick] = true;
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[pick]));
        }
        centroids.push(points[pick].clone());
    }
    centroids
}

/// Lloyd iterations from a k-means++ start.
pub fn lloyd(points: &[Vec<f64>], k: usize, seed: u64, max_iters: usize, tol: f64) -> Result<KMeansRun> {
    if points.is_empty() {
        return Err(Error::invalid("k-means on an empty point set"));
    }
    if k == 0 || k > points.len() {
        return Err(Error::invalid(format!(
            "k = {k} must be between 1 and the number of points ({})",
            points.len()
        )));
    }
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut sse_history = Vec::new();
    let mut iterations = 0;
    let (mut labels, mut sse) = assign(points, &centroids);
    sse_history.push(sse);
    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift = 0.0f64;
        for (id, (sum, &count)) in sums.into_iter().zip(&counts).enumerate() {
            // An emptied cluster keeps its previous centroid.
            if count == 0 {
                continue;
            }
            let mean: Vec<f64> = sum.into_iter().map(|s| s / count as f64).collect();
            shift = shift.max(sq_dist(&mean, &centroids[id]).sqrt());
            centroids[id] = mean;
        }
        (labels, sse) = assign(points, &centroids);
        sse_history.push(sse);
        if shift < tol {
            break;
        }
    }
    Ok(KMeansRun {
        centroids,
        labels,
        sse_history,
        iterations,
    })
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / norm).collect()
    }
}

pub fn kmeans(table: &EmbeddingTable, options: &KMeansOptions) -> Result<ClusterModel> {
    Ok(kmeans_traced(table, options)?.0)
}

/// Clusters the table's vectors and also returns the underlying run.
pub fn kmeans_traced(table: &EmbeddingTable, options: &KMeansOptions) -> Result<(ClusterModel, KMeansRun)> {
    if table.is_empty() {
        return Err(Error::invalid("cannot cluster an empty embedding table"));
    }
    if options.k > table.len() {
        return Err(Error::invalid(format!(
            "k = {} exceeds the vocabulary size {}",
            options.k,
            table.len()
        )));
    }
    let words: Vec<&String> = table.entries.keys().collect();
    let points: Vec<Vec<f64>> = table
        .entries
        .values()
        .map(|v| if options.normalize { normalized(v) } else { v.clone() })
        .collect();
    let run = lloyd(&points, options.k, options.seed, options.max_iters, options.tol)?;
    let assignment = words
        .into_iter()
        .zip(&run.labels)
        .map(|(w, &l)| (w.clone(), l))
        .collect();
    let model = ClusterModel {
        k: options.k,
        oov_id: options.k,
        assignment,
        centroids: run.centroids.clone(),
        normalized: options.normalize,
    };
    Ok((model, run))
}
