//! Word vectors and the k-means word clusters used as generalized context
//! features.

mod kmeans;
mod skipgram;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Abstract;
use crate::{Error, Result};

pub use kmeans::{kmeans, kmeans_traced, lloyd, KMeansOptions, KMeansRun};
pub use skipgram::{sgns_gradients, train_skipgram, SgnsGradients, SkipGramOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dimension: usize,
    pub entries: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            entries: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        Some(cosine(self.get(a)?, self.get(b)?))
    }

    /// Writes the textual format: a `<vocab> <dim>` header, then
    /// `word f1 .. fdim` per line, words in sorted order.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.entries.len(), self.dimension);
        for (word, v) in &self.entries {
            out.push_str(word);
            for x in v {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text)
}

/// Parses the textual embedding format. An empty input is an empty table.
pub fn parse_embeddings(text: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Ok(EmbeddingTable::new(0));
    };
    let schema = |line: usize, message: String| Error::Schema { line, message };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (declared, dimension) = match fields.as_slice() {
        [v, d] => (
            v.parse::<usize>().map_err(|e| schema(1, format!("bad vocabulary size: {e}")))?,
            d.parse::<usize>().map_err(|e| schema(1, format!("bad dimension: {e}")))?,
        ),
        _ => return Err(schema(1, "header must be `<vocab_size> <dimension>`".into())),
    };
    if dimension == 0 && declared > 0 {
        return Err(schema(1, "dimension must be positive".into()));
    }
    let mut table = EmbeddingTable::new(dimension);
    for (n, line) in lines {
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap_or_default().to_lowercase();
        let values = parts
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| schema(n + 1, format!("bad float: {e}")))?;
        if values.len() != dimension {
            return Err(schema(
                n + 1,
                format!("expected {dimension} values, found {}", values.len()),
            ));
        }
        if table.entries.insert(word.clone(), values).is_some() {
            log::warn!("line {}: duplicate word {word:?}, keeping the last vector", n + 1);
        }
    }
    if table.entries.len() != declared {
        log::warn!("header declares {declared} words, file has {}", table.entries.len());
    }
    Ok(table)
}

/// Word-to-cluster assignment. Unknown words, including the context padding
/// token, fall into the sentinel cluster `oov_id == k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub oov_id: usize,
    pub assignment: BTreeMap<String, usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Whether vectors were length-normalized before clustering.
    #[serde(default)]
    pub normalized: bool,
}

impl ClusterModel {
    /// A model with no words: every lookup returns the sentinel.
    pub fn empty() -> Self {
        ClusterModel {
            k: 0,
            oov_id: 0,
            assignment: BTreeMap::new(),
            centroids: Vec::new(),
            normalized: false,
        }
    }

    pub fn cluster_of(&self, word: &str) -> usize {
        match self.assignment.get(word) {
            Some(&id) => id,
            None => self
                .assignment
                .get(&vocabulary_key(word))
                .copied()
                .unwrap_or(self.oov_id),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: ClusterModel = serde_json::from_str(&text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.oov_id != self.k {
            return Err(Error::invalid("oov_id must equal k"));
        }
        if let Some((w, id)) = self.assignment.iter().find(|(_, &id)| id >= self.k) {
            return Err(Error::invalid(format!("word {w:?} assigned to cluster {id} >= k")));
        }
        Ok(())
    }
}

/// Embedding vocabulary form of a token: lowercase, with inner whitespace
/// (as in merged number words) replaced by `_` so the text format stays
/// one word per field.
pub fn vocabulary_key(token: &str) -> String {
    token.split_whitespace().collect::<Vec<_>>().join("_").to_lowercase()
}

/// Vocabulary keys of every sentence, the training input for
/// [`train_skipgram`].
pub fn token_sentences(corpus: &[Abstract]) -> Vec<Vec<String>> {
    corpus
        .iter()
        .flat_map(|a| a.sentences().map(|(_, _, s)| s.tokens.iter().map(|t| vocabulary_key(&t.lower)).collect()))
        .collect()
}

pub fn cluster_of(model: &ClusterModel, word: &str) -> usize {
    model.cluster_of(word)
}
