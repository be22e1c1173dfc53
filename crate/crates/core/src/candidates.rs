//! Rule stage: every integer mention of at least ten is a size candidate.

use serde::{Deserialize, Serialize};

use crate::corpus::{Abstract, Sentence};
use crate::{Error, Result};

/// Integers below this value are discarded.
pub const DEFAULT_MIN_VALUE: u64 = 10;

/// Half-width of the context window around a candidate.
pub const WINDOW: usize = 3;

pub const PAD: &str = "<PAD>";

/// One slot of the seven-token context window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSlot {
    pub surface: String,
    pub lower: String,
    pub stem: String,
}

impl ContextSlot {
    pub fn pad() -> ContextSlot {
        ContextSlot {
            surface: PAD.into(),
            lower: PAD.into(),
            stem: PAD.into(),
        }
    }

    pub fn is_pad(&self) -> bool {
        self.surface == PAD
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub abstract_id: String,
    pub section_index: usize,
    /// Global sentence index within the abstract.
    pub sentence_index: usize,
    pub token_position: usize,
    pub value: u64,
    pub surface: String,
    /// Positions n-3..=n+3; slot 3 is the candidate itself.
    pub context: Vec<ContextSlot>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCandidate {
    pub candidate: Candidate,
    pub is_size: bool,
}

/// Candidate as written by the `extract` command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub abstract_id: String,
    pub sentence_index: usize,
    pub token_position: usize,
    pub value: u64,
    pub surface: String,
    pub context: Vec<String>,
}

impl From<&Candidate> for CandidateRecord {
    fn from(c: &Candidate) -> Self {
        CandidateRecord {
            abstract_id: c.abstract_id.clone(),
            sentence_index: c.sentence_index,
            token_position: c.token_position,
            value: c.value,
            surface: c.surface.clone(),
            context: c.context.iter().map(|s| s.surface.clone()).collect(),
        }
    }
}

fn context_window(sentence: &Sentence, n: usize) -> Vec<ContextSlot> {
    (0..=2 * WINDOW)
        .map(|slot| {
            (n + slot)
                .checked_sub(WINDOW)
                .and_then(|i| sentence.tokens.get(i))
                .map_or_else(ContextSlot::pad, |t| ContextSlot {
                    surface: t.surface.clone(),
                    lower: t.lower.clone(),
                    stem: t.stem.clone(),
                })
        })
        .collect()
}

/// Candidates in document order using the default threshold of ten.
pub fn extract_candidates(abstract_: &Abstract) -> Vec<Candidate> {
    extract_candidates_with(abstract_, DEFAULT_MIN_VALUE)
}

pub fn extract_candidates_with(abstract_: &Abstract, min_value: u64) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (section_index, _, sentence) in abstract_.sentences() {
        for token in &sentence.tokens {
            let Some(value) = token.numeric_value.filter(|&v| v >= min_value) else {
                continue;
            };
            out.push(Candidate {
                abstract_id: abstract_.id.clone(),
                section_index,
                sentence_index: sentence.index_in_abstract,
                token_position: token.position,
                value,
                surface: token.surface.clone(),
                context: context_window(sentence, token.position),
            });
        }
    }
    out
}

/// Marks every candidate whose value equals the gold size as positive.
pub fn label_candidates(abstract_: &Abstract) -> Result<Vec<LabeledCandidate>> {
    label_candidates_with(abstract_, DEFAULT_MIN_VALUE)
}

pub fn label_candidates_with(abstract_: &Abstract, min_value: u64) -> Result<Vec<LabeledCandidate>> {
    let gold = abstract_
        .gold_size
        .ok_or_else(|| Error::MissingGold(abstract_.id.clone()))?;
    Ok(extract_candidates_with(abstract_, min_value)
        .into_iter()
        .map(|candidate| LabeledCandidate {
            is_size: candidate.value == gold,
            candidate,
        })
        .collect())
}

pub fn corpus_candidate_count(corpus: &[Abstract]) -> usize {
    corpus.iter().map(|a| extract_candidates(a).len()).sum()
}
