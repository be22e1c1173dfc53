use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{AblationRow, EvalReport};
use crate::candidates::CandidateRecord;

/// One line of the `predict` output stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub id: String,
    pub size: Option<u64>,
    pub probability: Option<f64>,
    pub candidate: Option<CandidateRecord>,
    pub runner_up: Option<RunnerUp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunnerUp {
    pub value: u64,
    pub probability: f64,
}

fn pad_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{cell:<w$}", w = widths[c]))
            .collect();
        writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            writeln!(out, "{}", rule.join("  ")).unwrap();
        }
    }
    out
}

/// Plain-text summary of one evaluation.
pub fn evaluation_table(report: &EvalReport) -> String {
    pad_table(&[
        vec!["Abstracts".into(), "Correct".into(), "Accuracy (95% CI)".into()],
        vec![
            report.n_abstracts.to_string(),
            report.n_correct.to_string(),
            report.display(),
        ],
    ])
}

/// Aligned ablation table, one row per feature selection.
pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut table = vec![vec![
        "Features".to_string(),
        "Accuracy (95% CI)".to_string(),
        "Correct".to_string(),
        "C".to_string(),
        "gamma".to_string(),
    ]];
    for row in rows {
        match (&row.report, &row.params) {
            (Some(r), Some(p)) => table.push(vec![
                row.label.clone(),
                r.display(),
                format!("{}/{}", r.n_correct, r.n_abstracts),
                format!("{}", p.cost),
                format!("{}", p.gamma),
            ]),
            _ => table.push(vec![
                row.label.clone(),
                format!("failed: {}", row.error.as_deref().unwrap_or("unknown error")),
            ]),
        }
    }
    pad_table(&table)
}
