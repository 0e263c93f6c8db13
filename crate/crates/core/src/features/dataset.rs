use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::labels::{resolve_label, Label, LabelError, VoteSheet};
use super::vector::{extract_with_flags, FeatureVector};
use super::FeatureError;
use crate::ingest::QuestionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Manual,
    Synthetic,
}

/// One dataset line: the eleven features flattened next to the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub question_id: u64,
    #[serde(flatten)]
    pub features: FeatureVector,
    pub label: Label,
    pub provenance: Provenance,
}

pub const DATASET_HEADER: &str =
    "# postforge dataset v1; aar uses answerer reputation at collection time (record as_of)";

pub fn write_dataset(path: &Path, examples: &[LabeledExample]) -> Result<(), FeatureError> {
    let mut out = Vec::new();
    writeln!(out, "{DATASET_HEADER}").expect("vec write");
    for e in examples {
        serde_json::to_writer(&mut out, e).expect("example serializes");
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| FeatureError::Io(path.display().to_string(), e))
}

/// Reads a dataset file; `#` lines are comments.
pub fn read_dataset(path: &Path) -> Result<Vec<LabeledExample>, FeatureError> {
    let text =
        fs::read_to_string(path).map_err(|e| FeatureError::Io(path.display().to_string(), e))?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Vec<LabeledExample>, FeatureError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| FeatureError::BadLine {
                line: n + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn parse_vote_sheets(text: &str) -> Result<Vec<VoteSheet>, FeatureError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| FeatureError::BadLine {
                line: n + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub labeled: usize,
    pub needs_review: Vec<u64>,
    pub unresolvable: Vec<u64>,
    pub missing_question: Vec<u64>,
    /// Questions whose vector used a zero convention (no answers / no views).
    pub degenerate: Vec<u64>,
}

/// Joins vote sheets with stored questions into labeled examples.
pub fn build_dataset(
    questions: &[QuestionRecord],
    sheets: &[VoteSheet],
) -> (Vec<LabeledExample>, BuildReport) {
    let by_id: HashMap<u64, &QuestionRecord> =
        questions.iter().map(|q| (q.question_id, q)).collect();
    let mut report = BuildReport::default();
    let mut out = Vec::new();
    for sheet in sheets {
        let label = match resolve_label(sheet) {
            Ok(Some(l)) => l,
            Ok(None) => {
                report.needs_review.push(sheet.question_id);
                continue;
            }
            Err(LabelError::Unresolvable { question_id, .. }) => {
                report.unresolvable.push(question_id);
                continue;
            }
        };
        let Some(q) = by_id.get(&sheet.question_id) else {
            report.missing_question.push(sheet.question_id);
            continue;
        };
        let (features, flags) = extract_with_flags(q);
        if flags.any() {
            report.degenerate.push(q.question_id);
        }
        out.push(LabeledExample {
            question_id: q.question_id,
            features,
            label,
            provenance: Provenance::Manual,
        });
    }
    report.labeled = out.len();
    (out, report)
}
