//! Survey responses: ingestion, placeholder normalization and per-question
//! statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::jsonl::{self, JsonlError};

/// Token that replaces every "not applicable" style answer.
pub const PLACEHOLDER: &str = "not applicable";

pub const RESPONSES_SCHEMA: &str = "linkstudy.responses/1";

pub const DEFAULT_DENYLIST: &[&str] = &["n/a", "* n.a.", "not applicable.", "pass", ".", "-"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurveyId {
    RepositoryUrl,
    DonationPlatformUrl,
}

impl SurveyId {
    pub fn as_str(self) -> &'static str {
        match self {
            SurveyId::RepositoryUrl => "repository_url",
            SurveyId::DonationPlatformUrl => "donation_platform_url",
        }
    }
}

impl std::fmt::Display for SurveyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SurveyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "repository_url" => Ok(SurveyId::RepositoryUrl),
            "donation_platform_url" => Ok(SurveyId::DonationPlatformUrl),
            other => Err(format!(
                "unknown survey {other:?} (expected repository_url or donation_platform_url)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub survey_id: SurveyId,
    pub question_id: String,
    pub raw_text: String,
    pub cleaned_text: String,
    pub is_placeholder: bool,
}

/// Case-folded, trimmed denylist used for exact matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Denylist(BTreeSet<String>);

impl Denylist {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(
            entries
                .into_iter()
                .map(|e| fold(e.as_ref()))
                .filter(|e| !e.is_empty())
                .collect(),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn matches(&self, text: &str) -> bool {
        let folded = fold(text);
        folded == PLACEHOLDER || self.0.contains(&folded)
    }
}

impl Default for Denylist {
    fn default() -> Self {
        Self::new(DEFAULT_DENYLIST)
    }
}

fn fold(text: &str) -> String {
    text.trim().to_lowercase()
}

/// Returns `(cleaned_text, is_placeholder)`. Non-matching text is returned
/// unchanged.
pub fn clean_response(raw: &str, denylist: &Denylist) -> (String, bool) {
    if denylist.matches(raw) {
        (PLACEHOLDER.to_owned(), true)
    } else {
        (raw.to_owned(), false)
    }
}

impl SurveyResponse {
    pub fn new(survey_id: SurveyId, question_id: &str, raw_text: &str, denylist: &Denylist) -> Self {
        let (cleaned_text, is_placeholder) = clean_response(raw_text, denylist);
        Self {
            survey_id,
            question_id: question_id.to_owned(),
            raw_text: raw_text.to_owned(),
            cleaned_text,
            is_placeholder,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("column {column:?} mapped to question {question_id} is missing from the CSV header")]
    MissingColumn { question_id: String, column: String },
    #[error(transparent)]
    Store(#[from] JsonlError),
}

/// Maps question ids to CSV column headers for one survey.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub survey_id: SurveyId,
    pub columns: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub rows: usize,
    pub malformed_rows: usize,
    pub empty_cells: usize,
    pub responses: usize,
    pub placeholders: usize,
}

pub fn ingest_csv(
    path: &Path,
    schema: &ColumnMap,
    denylist: &Denylist,
) -> Result<(Vec<SurveyResponse>, IngestStats), IngestError> {
    let read_err = |e: &dyn std::fmt::Display| IngestError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| read_err(&e))?;
    let headers = reader.headers().map_err(|e| read_err(&e))?.clone();
    let mut mapped = Vec::new();
    for (question_id, column) in &schema.columns {
        let idx = headers
            .iter()
            .position(|h| h.trim() == column.trim())
            .ok_or_else(|| IngestError::MissingColumn {
                question_id: question_id.clone(),
                column: column.clone(),
            })?;
        mapped.push((question_id.as_str(), idx));
    }

    let mut stats = IngestStats::default();
    let mut responses = Vec::new();
    for row in reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                log::warn!("{}: skipping malformed row: {e}", path.display());
                stats.malformed_rows += 1;
                continue;
            }
        };
        stats.rows += 1;
        for (question_id, idx) in &mapped {
            let cell = row.get(*idx).unwrap_or_default();
            if cell.trim().is_empty() {
                stats.empty_cells += 1;
                continue;
            }
            let response = SurveyResponse::new(schema.survey_id, question_id, cell, denylist);
            stats.placeholders += usize::from(response.is_placeholder);
            responses.push(response);
        }
    }
    stats.responses = responses.len();
    Ok((responses, stats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionStats {
    pub question_id: String,
    /// Non-placeholder responses.
    pub count: usize,
    pub placeholders: usize,
    /// Mean length in Unicode scalar values; absent when `count` is zero.
    pub mean_char_length: Option<f64>,
}

pub fn question_stats(responses: &[SurveyResponse]) -> Vec<QuestionStats> {
    let mut acc: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for r in responses {
        let entry = acc.entry(r.question_id.as_str()).or_default();
        if r.is_placeholder {
            entry.2 += 1;
        } else {
            entry.0 += 1;
            entry.1 += r.raw_text.chars().count();
        }
    }
    acc.into_iter()
        .map(|(q, (count, chars, placeholders))| QuestionStats {
            question_id: q.to_owned(),
            count,
            placeholders,
            mean_char_length: (count > 0).then(|| chars as f64 / count as f64),
        })
        .collect()
}

pub fn render_stats(stats: &[QuestionStats]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<10} {:>7} {:>13} {:>16}", "Question", "Count", "Placeholders", "Mean char length");
    for q in stats {
        let mean = q.mean_char_length.map_or_else(|| "n/a".into(), |m| format!("{m:.0}"));
        let _ = writeln!(s, "{:<10} {:>7} {:>13} {:>16}", q.question_id, q.count, q.placeholders, mean);
    }
    let counted: Vec<_> = stats.iter().filter(|q| q.count > 0).collect();
    if !counted.is_empty() {
        let mean_count = counted.iter().map(|q| q.count as f64).sum::<f64>() / counted.len() as f64;
        let mean_len = counted.iter().filter_map(|q| q.mean_char_length).sum::<f64>() / counted.len() as f64;
        let _ = writeln!(s, "{:<10} {:>7.0} {:>13} {:>16.0}", "Average", mean_count, "", mean_len);
    }
    s
}

pub fn write_store(path: &Path, responses: &[SurveyResponse]) -> Result<(), JsonlError> {
    jsonl::write(path, RESPONSES_SCHEMA, responses)
}

pub fn read_store(path: &Path) -> Result<Vec<SurveyResponse>, JsonlError> {
    jsonl::read(path, RESPONSES_SCHEMA)
}
