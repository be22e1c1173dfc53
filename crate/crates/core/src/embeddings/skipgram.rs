//! Skip-gram with negative sampling.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EmbeddingTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkipGramOptions {
    pub dimension: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramOptions {
    fn default() -> Self {
        SkipGramOptions {
            dimension: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 1,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

/// Loss and gradients of one (center, context, negatives) example.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradients {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Negative-sampling loss
/// `-ln σ(u_o·v) - Σ_k ln σ(-u_k·v)` and its gradients with respect to the
/// center vector `v`, the context output vector `u_o` and each negative `u_k`.
pub fn sgns_gradients(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> SgnsGradients {
    let s_pos = dot(context, center);
    let g_pos = sigmoid(s_pos) - 1.0;
    let mut loss = softplus(-s_pos);
    let mut d_center: Vec<f64> = context.iter().map(|u| g_pos * u).collect();
    let d_context: Vec<f64> = center.iter().map(|v| g_pos * v).collect();
    let mut d_negs = Vec::with_capacity(negatives.len());
    for u in negatives {
        let s = dot(u, center);
        let g = sigmoid(s);
        loss += softplus(s);
        for (d, x) in d_center.iter_mut().zip(*u) {
            *d += g * x;
        }
        d_negs.push(center.iter().map(|v| g * v).collect());
    }
    SgnsGradients {
        loss,
        center: d_center,
        context: d_context,
        negatives: d_negs,
    }
}

/// Trains skip-gram vectors on lowercased token sequences.
///
/// Deterministic for a fixed seed: sentences are visited in order, the
/// effective window for each center word is drawn from `1..=window`, and
/// negatives are drawn from the unigram distribution raised to 0.75.
pub fn train_skipgram(sentences: &[Vec<String>], options: &SkipGramOptions) -> Result<EmbeddingTable> {
    if options.dimension < 2 {
        return Err(Error::invalid("embedding dimension must be at least 2"));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for w in sentences.iter().flatten() {
        *counts.entry(w.as_str()).or_default() += 1;
    }
    if counts.is_empty() {
        return Err(Error::invalid("cannot train embeddings on an empty corpus"));
    }
    let mut vocab: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= options.min_count)
        .collect();
    if vocab.is_empty() {
        return Err(Error::invalid("no word reaches the minimum count"));
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, (w, _))| (*w, i)).collect();

    let mut cdf = Vec::with_capacity(vocab.len());
    let mut acc = 0.0;
    for (_, c) in &vocab {
        acc += (*c as f64).powf(0.75);
        cdf.push(acc);
    }

    let dim = options.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut input: Vec<Vec<f64>> = (0..vocab.len())
        .map(|_| (0..dim).map(|_| (rng.random::<f64>() - 0.5) / dim as f64).collect())
        .collect();
    let mut output = vec![vec![0.0; dim]; vocab.len()];

    let encoded: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().filter_map(|w| index.get(w.as_str()).copied()).collect())
        .collect();
    let total_steps = (options.epochs * encoded.iter().map(Vec::len).sum::<usize>()).max(1);
    let mut step = 0usize;

    for _ in 0..options.epochs {
        for sentence in &encoded {
            for (i, &center) in sentence.iter().enumerate() {
                let progress = step as f64 / total_steps as f64;
                let lr = options.learning_rate * (1.0 - progress).max(1e-4);
                step += 1;
                let reach = rng.random_range(1..=options.window.max(1));
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(sentence.len() - 1);
                for (j, &target) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let negs: Vec<usize> = (0..options.negatives)
                        .map(|_| sample(&cdf, &mut rng))
                        .filter(|&n| n != target)
                        .collect();
                    let neg_vecs: Vec<&[f64]> = negs.iter().map(|&n| output[n].as_slice()).collect();
                    let g = sgns_gradients(&input[center], &output[target], &neg_vecs);
                    for (x, d) in input[center].iter_mut().zip(&g.center) {
                        *x -= lr * d;
                    }
                    for (x, d) in output[target].iter_mut().zip(&g.context) {
                        *x -= lr * d;
                    }
                    for (&n, dn) in negs.iter().zip(&g.negatives) {
                        for (x, d) in output[n].iter_mut().zip(dn) {
                            *x -= lr * d;
                        }
                    }
                }
            }
        }
    }

    let mut table = EmbeddingTable::new(dim);
    for ((word, _), v) in vocab.iter().zip(input) {
        table.entries.insert(word.to_string(), v);
    }
    Ok(table)
}

fn sample(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let target = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}
