//! Candidate features: contextual, lexical and structural families, and
//! their encoding into sparse vectors through a frozen vocabulary.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::candidates::{Candidate, WINDOW};
use crate::corpus::{stem, Abstract};
use crate::embeddings::ClusterModel;
use crate::{Error, Result};

/// Candidates in this range (inclusive) are flagged as possible years.
pub const YEAR_RANGE: (u64, u64) = (1950, 2020);

/// Joins the seven context stems in the full-context-string feature.
pub const CONTEXT_SEPARATOR: char = '|';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FeatureGroup {
    Contextual,
    Lexical,
    Structural,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 3] = [
        FeatureGroup::Contextual,
        FeatureGroup::Lexical,
        FeatureGroup::Structural,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Contextual => "Contextual",
            FeatureGroup::Lexical => "Lexical",
            FeatureGroup::Structural => "Structural",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureGroup> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CONTEXTUAL" => Some(FeatureGroup::Contextual),
            "LEXICAL" => Some(FeatureGroup::Lexical),
            "STRUCTURAL" => Some(FeatureGroup::Structural),
            _ => None,
        }
    }

    /// Family a feature name belongs to, judged by its namespace.
    pub fn of_feature(name: &str) -> Option<FeatureGroup> {
        let head = name.split(['[', '=']).next().unwrap_or(name);
        match head {
            "ctx" | "ctxstr" | "cluster" | "pop_window" | "pop_dist" | "temporal_adj" => {
                Some(FeatureGroup::Contextual)
            }
            "ngram1" | "ngram2" | "ngram3" | "year" => Some(FeatureGroup::Lexical),
            "cat" | "label" | "likely_label" | "cand_pos_abs" | "cand_pos_rel" | "sent_pos_abs"
            | "sent_pos_rel" => Some(FeatureGroup::Structural),
            _ => None,
        }
    }
}

/// A nonempty set of feature families: the unit of ablation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureGroup>", into = "Vec<FeatureGroup>")]
pub struct FeatureGroups(BTreeSet<FeatureGroup>);

impl FeatureGroups {
    pub fn all() -> Self {
        FeatureGroups(FeatureGroup::ALL.into_iter().collect())
    }

    pub fn contains(&self, g: FeatureGroup) -> bool {
        self.0.contains(&g)
    }

    pub fn iter(&self) -> impl Iterator<Item = FeatureGroup> + '_ {
        self.0.iter().copied()
    }

    /// Row label in the style of an ablation table: "All", a single family
    /// name, or "- Family" for a leave-one-out selection.
    pub fn label(&self) -> String {
        match self.0.len() {
            3 => "All".to_string(),
            1 => self.iter().next().unwrap().name().to_string(),
            _ => {
                let missing = FeatureGroup::ALL.into_iter().find(|g| !self.contains(*g)).unwrap();
                format!("- {}", missing.name())
            }
        }
    }

    /// The seven selections of an ablation study: all families, each family
    /// alone, and each family left out.
    pub fn ablation_rows() -> Vec<FeatureGroups> {
        const ORDER: [FeatureGroup; 3] = [
            FeatureGroup::Contextual,
            FeatureGroup::Structural,
            FeatureGroup::Lexical,
        ];
        let mut rows = vec![FeatureGroups::all()];
        for g in ORDER {
            rows.push(FeatureGroups([g].into_iter().collect()));
        }
        for g in ORDER {
            rows.push(FeatureGroups(FeatureGroup::ALL.into_iter().filter(|x| *x != g).collect()));
        }
        rows
    }
}

impl TryFrom<Vec<FeatureGroup>> for FeatureGroups {
    type Error = Error;

    fn try_from(v: Vec<FeatureGroup>) -> Result<Self> {
        feature_groups(&v)
    }
}

impl From<FeatureGroups> for Vec<FeatureGroup> {
    fn from(g: FeatureGroups) -> Self {
        g.0.into_iter().collect()
    }
}

impl fmt::Display for FeatureGroups {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub fn feature_groups(selection: &[FeatureGroup]) -> Result<FeatureGroups> {
    if selection.is_empty() {
        return Err(Error::invalid("feature group selection must not be empty"));
    }
    Ok(FeatureGroups(selection.iter().copied().collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Indicator,
    /// Min-max scaled at vectorization time.
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFeature {
    pub name: String,
    pub value: f64,
    pub kind: FeatureKind,
}

impl NamedFeature {
    pub fn indicator(name: impl Into<String>) -> Self {
        NamedFeature {
            name: name.into(),
            value: 1.0,
            kind: FeatureKind::Indicator,
        }
    }

    pub fn numeric(name: impl Into<String>, value: f64) -> Self {
        NamedFeature {
            name: name.into(),
            value,
            kind: FeatureKind::Numeric,
        }
    }
}

/// Term lists behind the population, temporal and likely-label features.
/// Population and temporal terms are kept as stems so they can be compared
/// with stemmed context tokens; label entries are lowercase substrings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicons {
    pub population_terms: BTreeSet<String>,
    pub temporal_terms: BTreeSet<String>,
    pub likely_labels: BTreeSet<String>,
}

pub const DEFAULT_POPULATION_TERMS: &[&str] = &[
    "patient", "subject", "participant", "man", "men", "woman", "women", "child", "children",
    "adult", "adolescent", "infant", "volunteer", "individual", "male", "female", "elderly", "boy",
    "girl",
];
pub const DEFAULT_TEMPORAL_TERMS: &[&str] = &[
    "year", "month", "week", "day", "hour", "minute", "yr", "mo", "wk",
];
pub const DEFAULT_LIKELY_LABELS: &[&str] = &["patient", "participant", "method", "population", "subject"];

impl Default for Lexicons {
    fn default() -> Self {
        Lexicons::new(DEFAULT_POPULATION_TERMS, DEFAULT_TEMPORAL_TERMS, DEFAULT_LIKELY_LABELS)
    }
}

fn stem_all<S: AsRef<str>>(terms: &[S]) -> BTreeSet<String> {
    terms.iter().map(|t| stem(&t.as_ref().trim().to_lowercase())).collect()
}

impl Lexicons {
    pub fn new<S: AsRef<str>>(population: &[S], temporal: &[S], likely_labels: &[S]) -> Self {
        Lexicons {
            population_terms: stem_all(population),
            temporal_terms: stem_all(temporal),
            likely_labels: likely_labels
                .iter()
                .map(|t| t.as_ref().trim().to_lowercase())
                .collect(),
        }
    }

    /// Replaces any list for which a file is given.
    pub fn from_files(
        population: Option<&Path>,
        temporal: Option<&Path>,
        likely_labels: Option<&Path>,
    ) -> Result<Self> {
        let mut lex = Lexicons::default();
        if let Some(p) = population {
            lex.population_terms = stem_all(&read_term_file(p)?);
        }
        if let Some(p) = temporal {
            lex.temporal_terms = stem_all(&read_term_file(p)?);
        }
        if let Some(p) = likely_labels {
            lex.likely_labels = read_term_file(p)?.iter().map(|t| t.to_lowercase()).collect();
        }
        Ok(lex)
    }
}

/// One term per line; blank lines and `#` comments are ignored.
pub fn read_term_file(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_terms(&text))
}

pub fn parse_terms(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

fn offset_label(slot: usize) -> String {
    let off = slot as isize - WINDOW as isize;
    if off > 0 {
        format!("+{off}")
    } else {
        off.to_string()
    }
}

pub fn contextual_features(c: &Candidate, clusters: &ClusterModel, lex: &Lexicons) -> Vec<NamedFeature> {
    let mut out = Vec::with_capacity(20);
    for (slot, tok) in c.context.iter().enumerate() {
        if slot != WINDOW {
            out.push(NamedFeature::indicator(format!("ctx[{}]={}", offset_label(slot), tok.stem)));
        }
    }
    let joined: Vec<&str> = c.context.iter().map(|s| s.stem.as_str()).collect();
    out.push(NamedFeature::indicator(format!(
        "ctxstr={}",
        joined.join(&CONTEXT_SEPARATOR.to_string())
    )));
    for (slot, tok) in c.context.iter().enumerate() {
        let id = if tok.is_pad() { clusters.oov_id } else { clusters.cluster_of(&tok.lower) };
        out.push(NamedFeature::indicator(format!("cluster[{}]={id}", offset_label(slot))));
    }
    let nearest_population = c
        .context
        .iter()
        .enumerate()
        .filter(|(slot, tok)| *slot != WINDOW && lex.population_terms.contains(&tok.stem))
        .map(|(slot, _)| slot.abs_diff(WINDOW))
        .min();
    if let Some(d) = nearest_population {
        out.push(NamedFeature::indicator("pop_window"));
        out.push(NamedFeature::numeric("pop_dist", d as f64));
    }
    let temporal = [WINDOW - 1, WINDOW + 1]
        .iter()
        .any(|&s| lex.temporal_terms.contains(&c.context[s].stem));
    if temporal {
        out.push(NamedFeature::indicator("temporal_adj"));
    }
    out
}

pub fn lexical_features(c: &Candidate, a: &Abstract) -> Vec<NamedFeature> {
    let mut out = Vec::new();
    if let Some((_, sentence)) = a.sentence(c.sentence_index) {
        let stems: Vec<&str> = sentence.tokens.iter().map(|t| t.stem.as_str()).collect();
        let mut seen = BTreeSet::new();
        for n in 1..=3 {
            for gram in stems.windows(n) {
                let name = format!("ngram{n}={}", gram.join(" "));
                if seen.insert(name.clone()) {
                    out.push(NamedFeature::indicator(name));
                }
            }
        }
    }
    if (YEAR_RANGE.0..=YEAR_RANGE.1).contains(&c.value) {
        out.push(NamedFeature::indicator("year"));
    }
    out
}

pub fn structural_features(c: &Candidate, a: &Abstract, lex: &Lexicons) -> Vec<NamedFeature> {
    let mut out = Vec::new();
    let Some((section, sentence)) = a.sentence(c.sentence_index) else {
        return out;
    };
    if let Some(cat) = section.category {
        out.push(NamedFeature::indicator(format!("cat={cat}")));
    }
    if let Some(label) = &section.label {
        let lower = label.to_lowercase();
        if lex.likely_labels.iter().any(|l| lower.contains(l.as_str())) {
            out.push(NamedFeature::indicator("likely_label"));
        }
        out.push(NamedFeature::indicator(format!("label={lower}")));
    }
    let len = sentence.tokens.len().max(1) as f64;
    out.push(NamedFeature::numeric("cand_pos_abs", c.token_position as f64));
    out.push(NamedFeature::numeric("cand_pos_rel", c.token_position as f64 / len));
    let total = a.sentence_count().max(1) as f64;
    out.push(NamedFeature::numeric("sent_pos_abs", c.sentence_index as f64));
    out.push(NamedFeature::numeric("sent_pos_rel", c.sentence_index as f64 / total));
    out
}

/// Composes the selected families into one extraction function.
#[derive(Debug, Clone, Copy)]
pub struct FeatureExtractor<'a> {
    pub groups: &'a FeatureGroups,
    pub clusters: &'a ClusterModel,
    pub lexicons: &'a Lexicons,
}

impl FeatureExtractor<'_> {
    pub fn extract(&self, c: &Candidate, a: &Abstract) -> Vec<NamedFeature> {
        let mut out = Vec::new();
        if self.groups.contains(FeatureGroup::Contextual) {
            out.extend(contextual_features(c, self.clusters, self.lexicons));
        }
        if self.groups.contains(FeatureGroup::Lexical) {
            out.extend(lexical_features(c, a));
        }
        if self.groups.contains(FeatureGroup::Structural) {
            out.extend(structural_features(c, a, self.lexicons));
        }
        out
    }
}

/// Sparse vector with strictly increasing ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    /// Sorts by id; for repeated ids the last value wins. Zeros are dropped.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.reverse();
        pairs.sort_by_key(|p| p.0);
        pairs.dedup_by_key(|p| p.0);
        pairs.retain(|p| p.1 != 0.0);
        FeatureVector { entries: pairs }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u32) -> f64 {
        self.entries
            .binary_search_by_key(&id, |p| p.0)
            .map_or(0.0, |i| self.entries[i].1)
    }

    /// Squared Euclidean distance over the union of both supports.
    pub fn sq_dist(&self, other: &FeatureVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    acc += a[i].1 * a[i].1;
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    acc += b[j].1 * b[j].1;
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let d = a[i].1 - b[j].1;
                    acc += d * d;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc += a[i..].iter().map(|p| p.1 * p.1).sum::<f64>();
        acc += b[j..].iter().map(|p| p.1 * p.1).sum::<f64>();
        acc
    }
}

/// Feature names mapped to dense ids. Once frozen, unseen names are dropped
/// instead of inserted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct FeatureVocabulary {
    names: Vec<String>,
    index: HashMap<String, u32>,
    frozen: bool,
}

impl From<Vec<String>> for FeatureVocabulary {
    /// A vocabulary restored from its name list is frozen.
    fn from(names: Vec<String>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        FeatureVocabulary {
            names,
            index,
            frozen: true,
        }
    }
}

impl From<FeatureVocabulary> for Vec<String> {
    fn from(v: FeatureVocabulary) -> Self {
        v.names
    }
}

impl FeatureVocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    fn id_for(&mut self, name: &str) -> Option<u32> {
        if let Some(id) = self.get(name) {
            return Some(id);
        }
        if self.frozen {
            return None;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Some(id)
    }

    /// Encodes without ever inserting.
    pub fn encode(&self, features: &[NamedFeature], scaling: &ScalingTable) -> FeatureVector {
        FeatureVector::from_pairs(
            features
                .iter()
                .filter_map(|f| self.get(&f.name).map(|id| (id, scaling.apply(f))))
                .collect(),
        )
    }
}

/// Per-feature `(min, max)` ranges for numeric features, fitted on training data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalingTable {
    pub ranges: BTreeMap<String, (f64, f64)>,
}

impl ScalingTable {
    pub fn fit<'a>(features: impl IntoIterator<Item = &'a NamedFeature>) -> Self {
        let mut ranges: BTreeMap<String, (f64, f64)> = BTreeMap::new();
        for f in features.into_iter().filter(|f| f.kind == FeatureKind::Numeric) {
            ranges
                .entry(f.name.clone())
                .and_modify(|r| {
                    r.0 = r.0.min(f.value);
                    r.1 = r.1.max(f.value);
                })
                .or_insert((f.value, f.value));
        }
        ScalingTable { ranges }
    }

    /// Scaled value of a feature; indicators are returned as is.
    pub fn apply(&self, f: &NamedFeature) -> f64 {
        if f.kind == FeatureKind::Indicator {
            return f.value;
        }
        match self.ranges.get(&f.name) {
            Some(&(lo, hi)) if hi > lo => ((f.value - lo) / (hi - lo)).clamp(0.0, 1.0),
            Some(&(lo, _)) => {
                if f.value > lo {
                    1.0
                } else {
                    0.0
                }
            }
            None => f.value.clamp(0.0, 1.0),
        }
    }
}

/// Encodes named features, inserting unseen names while the vocabulary is
/// still open.
pub fn vectorize(features: &[NamedFeature], vocab: &mut FeatureVocabulary, scaling: &ScalingTable) -> FeatureVector {
    FeatureVector::from_pairs(
        features
            .iter()
            .filter_map(|f| vocab.id_for(&f.name).map(|id| (id, scaling.apply(f))))
            .collect(),
    )
}
