//! Abstract ingestion: the JSON-lines corpus format, sentence splitting,
//! tokenization, stemming and number-word normalization.

mod numwords;
mod porter;
mod text;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use numwords::{compose as compose_number_words, normalize_number_words, parse_digits};
pub use porter::stem;
pub use text::{sentence_spans, split_sentences, tokenize};

/// Broad section category of a structured abstract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Category {
    Background,
    Objective,
    Methods,
    Results,
    Conclusions,
    Other,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Background,
        Category::Objective,
        Category::Methods,
        Category::Results,
        Category::Conclusions,
        Category::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Background => "BACKGROUND",
            Category::Objective => "OBJECTIVE",
            Category::Methods => "METHODS",
            Category::Results => "RESULTS",
            Category::Conclusions => "CONCLUSIONS",
            Category::Other => "OTHER",
        }
    }

    /// Maps a category name onto the closed set; anything unknown is `Other`.
    pub fn parse(name: &str) -> Category {
        match name.trim().to_ascii_uppercase().as_str() {
            "BACKGROUND" | "INTRODUCTION" => Category::Background,
            "OBJECTIVE" | "OBJECTIVES" => Category::Objective,
            "METHODS" | "METHOD" => Category::Methods,
            "RESULTS" | "RESULT" => Category::Results,
            "CONCLUSIONS" | "CONCLUSION" => Category::Conclusions,
            _ => Category::Other,
        }
    }

    /// Guesses a category from a free-text heading such as "Patients and methods".
    pub fn from_heading(heading: &str) -> Category {
        let h = heading.to_lowercase();
        let has = |keys: &[&str]| keys.iter().any(|k| h.contains(k));
        if has(&["conclusion", "interpretation"]) {
            Category::Conclusions
        } else if has(&["result", "finding"]) {
            Category::Results
        } else if has(&["method", "design", "setting", "patient", "participant", "subject", "intervention"]) {
            Category::Methods
        } else if has(&["background", "introduction", "context", "rationale"]) {
            Category::Background
        } else if has(&["objective", "aim", "purpose", "goal"]) {
            Category::Objective
        } else {
            Category::Other
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lower: String,
    pub stem: String,
    /// Index within the sentence.
    pub position: usize,
    /// Byte offsets into the sentence's raw text.
    pub char_span: (usize, usize),
    pub numeric_value: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub index_in_abstract: usize,
    pub raw: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Tokenizes and number-normalizes `raw`.
    pub fn analyze(index_in_abstract: usize, raw: &str) -> Sentence {
        Sentence {
            index_in_abstract,
            raw: raw.to_string(),
            tokens: normalize_number_words(raw, tokenize(raw)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub category: Option<Category>,
    /// Heading as written, case retained.
    pub label: Option<String>,
    pub text: String,
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abstract {
    pub id: String,
    pub sections: Vec<Section>,
    pub gold_size: Option<u64>,
}

/// One section as it appears in the corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionRecord {
    #[serde(default)]
    pub category: Option<String>,
    #[serde(default)]
    pub label: Option<String>,
    pub text: String,
}

/// One corpus line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractRecord {
    pub id: String,
    #[serde(default)]
    pub gold_size: Option<u64>,
    pub sections: Vec<SectionRecord>,
}

impl Abstract {
    /// Builds an abstract from its on-disk record, splitting and tokenizing
    /// every section.
    pub fn from_record(record: AbstractRecord) -> std::result::Result<Abstract, String> {
        if record.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if record.gold_size == Some(0) {
            return Err("gold_size must be at least 1".into());
        }
        let mut next = 0;
        let sections: Vec<Section> = record
            .sections
            .into_iter()
            .map(|s| {
                let sentences = split_sentences(&s.text)
                    .iter()
                    .map(|raw| {
                        next += 1;
                        Sentence::analyze(next - 1, raw)
                    })
                    .collect();
                Section {
                    category: s.category.as_deref().map(Category::parse),
                    label: s.label,
                    text: s.text,
                    sentences,
                }
            })
            .collect();
        if next == 0 {
            return Err("abstract has no sentences".into());
        }
        Ok(Abstract {
            id: record.id,
            sections,
            gold_size: record.gold_size,
        })
    }

    pub fn to_record(&self) -> AbstractRecord {
        AbstractRecord {
            id: self.id.clone(),
            gold_size: self.gold_size,
            sections: self
                .sections
                .iter()
                .map(|s| SectionRecord {
                    category: s.category.map(|c| c.as_str().to_string()),
                    label: s.label.clone(),
                    text: s.text.clone(),
                })
                .collect(),
        }
    }

    /// Convenience constructor from `(category, label, text)` triples.
    pub fn build(
        id: &str,
        gold_size: Option<u64>,
        sections: &[(Option<Category>, Option<&str>, &str)],
    ) -> Result<Abstract> {
        let record = AbstractRecord {
            id: id.to_string(),
            gold_size,
            sections: sections
                .iter()
                .map(|(c, l, t)| SectionRecord {
                    category: c.map(|c| c.as_str().to_string()),
                    label: l.map(str::to_string),
                    text: t.to_string(),
                })
                .collect(),
        };
        Abstract::from_record(record).map_err(Error::invalid)
    }

    pub fn sentences(&self) -> impl Iterator<Item = (usize, &Section, &Sentence)> {
        self.sections
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.sentences.iter().map(move |t| (i, s, t)))
    }

    pub fn sentence_count(&self) -> usize {
        self.sections.iter().map(|s| s.sentences.len()).sum()
    }

    /// Sentence by its global index together with its section.
    pub fn sentence(&self, index: usize) -> Option<(&Section, &Sentence)> {
        self.sentences()
            .find(|(_, _, s)| s.index_in_abstract == index)
            .map(|(_, sec, s)| (sec, s))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Skip malformed lines (recording a diagnostic) instead of failing.
    pub skip_malformed: bool,
}

#[derive(Debug, Default)]
pub struct LoadReport {
    pub abstracts: Vec<Abstract>,
    /// `(line number, message)` for every skipped line.
    pub diagnostics: Vec<(usize, String)>,
}

/// Loads a JSON-lines corpus, failing on the first malformed line.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Abstract>> {
    Ok(load_corpus_with(path, LoadOptions::default())?.abstracts)
}

pub fn load_corpus_with(path: impl AsRef<Path>, options: LoadOptions) -> Result<LoadReport> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), options).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_corpus(reader: impl BufRead, options: LoadOptions) -> Result<LoadReport> {
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<AbstractRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(Abstract::from_record)
            .and_then(|a| {
                if seen.contains(&a.id) {
                    Err(format!("duplicate id {:?}", a.id))
                } else {
                    Ok(a)
                }
            });
        match parsed {
            Ok(a) => {
                seen.insert(a.id.clone());
                report.abstracts.push(a);
            }
            Err(message) if options.skip_malformed => {
                log::warn!("skipping corpus line {line_no}: {message}");
                report.diagnostics.push((line_no, message));
            }
            Err(message) => {
                return Err(Error::Schema {
                    line: line_no,
                    message,
                })
            }
        }
    }
    Ok(report)
}

pub fn write_corpus(mut w: impl Write, abstracts: &[Abstract]) -> std::io::Result<()> {
    for a in abstracts {
        serde_json::to_writer(&mut w, &a.to_record())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_corpus(path: impl AsRef<Path>, abstracts: &[Abstract]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_corpus(&mut buf, abstracts).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Parses a plain-text abstract made of `HEADING: text` lines. Lines without
/// a heading continue the current section. The id is the file stem.
pub fn import_plain(path: impl AsRef<Path>) -> Result<Abstract> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_plain(&id, &text)
}

pub fn parse_plain(id: &str, text: &str) -> Result<Abstract> {
    let mut sections: Vec<SectionRecord> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        match split_heading(line) {
            Some((heading, body)) => sections.push(SectionRecord {
                category: Some(Category::from_heading(heading).as_str().to_string()),
                label: Some(heading.to_string()),
                text: body.to_string(),
            }),
            None => match sections.last_mut() {
                Some(s) => {
                    if !s.text.is_empty() {
                        s.text.push(' ');
                    }
                    s.text.push_str(line);
                }
                None => sections.push(SectionRecord {
                    category: None,
                    label: None,
                    text: line.to_string(),
                }),
            },
        }
    }
    let record = AbstractRecord {
        id: id.to_string(),
        gold_size: None,
        sections,
    };
    Abstract::from_record(record).map_err(|message| Error::Schema { line: 0, message })
}

fn split_heading(line: &str) -> Option<(&str, &str)> {
    let (head, body) = line.split_once(':')?;
    let head = head.trim();
    let ok = !head.is_empty()
        && head.len() <= 40
        && head.split_whitespace().count() <= 5
        && head.starts_with(|c: char| c.is_alphabetic())
        && head
            .chars()
            .all(|c| c.is_alphabetic() || c == ' ' || c == '&' || c == '/' || c == '-');
    ok.then(|| (head, body.trim()))
}
