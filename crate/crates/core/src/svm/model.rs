use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::kernel::KernelParams;
use super::platt::Platt;
use super::smo::decision_value;
use crate::candidates::{extract_candidates_with, Candidate};
use crate::corpus::Abstract;
use crate::embeddings::ClusterModel;
use crate::features::{
    vectorize, FeatureExtractor, FeatureGroups, FeatureVector, FeatureVocabulary, Lexicons, NamedFeature,
    ScalingTable,
};
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Everything needed to turn an abstract into candidate vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    pub groups: FeatureGroups,
    pub min_value: u64,
    pub vocabulary: FeatureVocabulary,
    pub scaling: ScalingTable,
    pub lexicons: Lexicons,
    pub clusters: ClusterModel,
}

impl FeatureSpace {
    pub fn extractor(&self) -> FeatureExtractor<'_> {
        FeatureExtractor {
            groups: &self.groups,
            clusters: &self.clusters,
            lexicons: &self.lexicons,
        }
    }

    pub fn named_features(&self, a: &Abstract) -> Vec<(Candidate, Vec<NamedFeature>)> {
        let ex = self.extractor();
        extract_candidates_with(a, self.min_value)
            .into_iter()
            .map(|c| {
                let f = ex.extract(&c, a);
                (c, f)
            })
            .collect()
    }

    /// Candidates of `a` with their vectors under the frozen vocabulary.
    pub fn encode(&self, a: &Abstract) -> Vec<(Candidate, FeatureVector)> {
        self.named_features(a)
            .into_iter()
            .map(|(c, f)| {
                let v = self.vocabulary.encode(&f, &self.scaling);
                (c, v)
            })
            .collect()
    }
}

/// Labelled candidate vectors of a gold-annotated corpus.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub space: FeatureSpace,
    pub vectors: Vec<FeatureVector>,
    pub labels: Vec<bool>,
    pub candidates: Vec<Candidate>,
    /// Candidate index range of each abstract, in corpus order.
    pub abstracts: Vec<Range<usize>>,
    pub abstract_ids: Vec<String>,
    pub gold: Vec<u64>,
}

impl TrainingSet {
    /// Extracts features for every candidate, fits the numeric scaling and
    /// builds then freezes the vocabulary.
    pub fn build(
        corpus: &[Abstract],
        groups: FeatureGroups,
        clusters: ClusterModel,
        lexicons: Lexicons,
        min_value: u64,
    ) -> Result<TrainingSet> {
        let mut space = FeatureSpace {
            groups,
            min_value,
            vocabulary: FeatureVocabulary::new(),
            scaling: ScalingTable::default(),
            lexicons,
            clusters,
        };
        let mut named = Vec::new();
        let mut candidates = Vec::new();
        let mut labels = Vec::new();
        let mut abstracts = Vec::new();
        let mut gold = Vec::new();
        for a in corpus {
            let g = a.gold_size.ok_or_else(|| Error::MissingGold(a.id.clone()))?;
            let start = candidates.len();
            for (c, f) in space.named_features(a) {
                labels.push(c.value == g);
                candidates.push(c);
                named.push(f);
            }
            abstracts.push(start..candidates.len());
            gold.push(g);
        }
        if candidates.is_empty() {
            return Err(Error::NoCandidates);
        }
        space.scaling = ScalingTable::fit(named.iter().flatten());
        let vectors = named
            .iter()
            .map(|f| vectorize(f, &mut space.vocabulary, &space.scaling))
            .collect();
        space.vocabulary.freeze();
        Ok(TrainingSet {
            space,
            vectors,
            labels,
            candidates,
            abstracts,
            abstract_ids: corpus.iter().map(|a| a.id.clone()).collect(),
            gold,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Trained classifier, self-sufficient for prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub params: KernelParams,
    pub support_vectors: Vec<FeatureVector>,
    /// `a_i y_i` per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub platt: Platt,
    pub space: FeatureSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Hashes {
    vocabulary: String,
    clusters: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    params: KernelParams,
    bias: f64,
    platt_a: f64,
    platt_b: f64,
    feature_groups: FeatureGroups,
    min_value: u64,
    dual_coefs: Vec<f64>,
    support_vectors: Vec<FeatureVector>,
    vocabulary: FeatureVocabulary,
    scaling: ScalingTable,
    lexicons: Lexicons,
    clusters: ClusterModel,
    hashes: Hashes,
}

fn content_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl SvmModel {
    pub fn decision_value(&self, x: &FeatureVector) -> f64 {
        decision_value(&self.support_vectors, &self.dual_coefs, self.bias, self.params.gamma, x)
    }

    pub fn predict_probability(&self, x: &FeatureVector) -> f64 {
        self.platt.probability(self.decision_value(x))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            params: self.params,
            bias: self.bias,
            platt_a: self.platt.a,
            platt_b: self.platt.b,
            feature_groups: self.space.groups.clone(),
            min_value: self.space.min_value,
            dual_coefs: self.dual_coefs.clone(),
            support_vectors: self.support_vectors.clone(),
            vocabulary: self.space.vocabulary.clone(),
            scaling: self.space.scaling.clone(),
            lexicons: self.space.lexicons.clone(),
            clusters: self.space.clusters.clone(),
            hashes: Hashes {
                vocabulary: content_hash(&self.space.vocabulary)?,
                clusters: content_hash(&self.space.clusters)?,
            },
        };
        Ok(serde_json::to_string(&file)?)
    }

    /// Parses a model file, refusing files whose parts do not match their
    /// recorded hashes.
    pub fn from_json(text: &str) -> Result<SvmModel> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Integrity(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        if content_hash(&file.vocabulary)? != file.hashes.vocabulary {
            return Err(Error::Integrity("vocabulary hash mismatch".into()));
        }
        if content_hash(&file.clusters)? != file.hashes.clusters {
            return Err(Error::Integrity("cluster model hash mismatch".into()));
        }
        if file.dual_coefs.len() != file.support_vectors.len() {
            return Err(Error::Integrity("support vector and coefficient counts differ".into()));
        }
        let dim = file.vocabulary.len() as u32;
        if file
            .support_vectors
            .iter()
            .any(|v| v.entries().last().is_some_and(|&(id, _)| id >= dim))
        {
            return Err(Error::Integrity("support vector id outside the vocabulary".into()));
        }
        file.params.validate()?;
        file.clusters.validate()?;
        Ok(SvmModel {
            params: file.params,
            support_vectors: file.support_vectors,
            dual_coefs: file.dual_coefs,
            bias: file.bias,
            platt: Platt {
                a: file.platt_a,
                b: file.platt_b,
            },
            space: FeatureSpace {
                groups: file.feature_groups,
                min_value: file.min_value,
                vocabulary: file.vocabulary,
                scaling: file.scaling,
                lexicons: file.lexicons,
                clusters: file.clusters,
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SvmModel> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SvmModel::from_json(&text)
    }
}
