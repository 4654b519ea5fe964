//! LLM topic modeling: batched extraction with topic carry-over followed by
//! a prompt-based merge stage, plus the run archive.

pub mod archive;
pub mod engine;
pub mod llm;
pub mod mock;
pub mod prompts;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use archive::RunArchive;
pub use engine::{
    extract_topics_batch, make_batches, merge_topics, run_pipeline, run_question, EngineConfig, EngineError,
    LlmExchange, QuestionRun, QuestionSpec, QuestionStatus, RunRecord,
};
pub use llm::{LlmClient, LlmError, LlmRequest, OllamaClient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Raw,
    Merged,
}

/// Topic label → keywords for one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicMap {
    pub question_id: String,
    pub stage: Stage,
    pub topics: IndexMap<String, Vec<String>>,
}

impl TopicMap {
    pub fn empty(question_id: &str, stage: Stage) -> Self {
        Self {
            question_id: question_id.to_owned(),
            stage,
            topics: IndexMap::new(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.topics.keys().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    /// Adds a topic; an existing label gains any keywords it does not yet
    /// have, in insertion order.
    pub fn union_topic(&mut self, label: &str, keywords: &[String]) {
        let entry = self.topics.entry(label.to_owned()).or_default();
        for k in keywords {
            if !entry.contains(k) {
                entry.push(k.clone());
            }
        }
    }
}

/// Canonical label form used for comparison: case-folded, trimmed, with
/// runs of whitespace and underscores collapsed to a single underscore.
pub fn normalize_label(label: &str) -> String {
    label
        .split(|c: char| c.is_whitespace() || c == '_')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

/// Display form: underscores become spaces and each word is title-cased.
pub fn render_label(label: &str) -> String {
    label
        .split(|c: char| c.is_whitespace() || c == '_')
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut chars = w.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars.flat_map(char::to_lowercase)).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<String>>()
        .join(" ")
}

/// Label with underscores replaced by spaces, as fed to sentence embedders.
pub fn spaced_label(label: &str) -> String {
    label
        .split(|c: char| c.is_whitespace() || c == '_')
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TopicParseError(pub String);

/// Parsed topics plus warnings about tolerated deviations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTopics {
    pub topics: IndexMap<String, Vec<String>>,
    pub warnings: Vec<String>,
}

fn strip_code_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(inner) = t.strip_prefix("```") else {
        return t;
    };
    let inner = inner.strip_prefix("json").unwrap_or(inner);
    inner.strip_suffix("```").unwrap_or(inner).trim()
}

/// Parses an LLM answer of the form `{"topic": ["kw", ...], ...}`.
///
/// Merged-stage labels are normalized. A string value is accepted as a
/// single keyword. Keyword counts outside 2–5 produce a warning; an empty
/// keyword list, an empty label or a non-object document is an error.
pub fn parse_topic_json(text: &str, stage: Stage) -> Result<ParsedTopics, TopicParseError> {
    let value: serde_json::Value = serde_json::from_str(strip_code_fence(text))
        .map_err(|e| TopicParseError(format!("not valid JSON: {e}")))?;
    let serde_json::Value::Object(map) = value else {
        return Err(TopicParseError("top-level value is not a JSON object".into()));
    };
    let mut topics: IndexMap<String, Vec<String>> = IndexMap::new();
    let mut warnings = Vec::new();
    for (raw_label, value) in map {
        let label = match stage {
            Stage::Raw => raw_label.trim().to_owned(),
            Stage::Merged => normalize_label(&raw_label),
        };
        if label.is_empty() {
            return Err(TopicParseError("empty topic label".into()));
        }
        let keywords: Vec<String> = match value {
            serde_json::Value::Array(items) => items
                .into_iter()
                .map(|v| match v {
                    serde_json::Value::String(s) => Ok(s.trim().to_owned()),
                    serde_json::Value::Number(n) => Ok(n.to_string()),
                    other => Err(TopicParseError(format!(
                        "keyword of topic {raw_label:?} is not a string: {other}"
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .filter(|k| !k.is_empty())
                .collect(),
            serde_json::Value::String(s) if !s.trim().is_empty() => vec![s.trim().to_owned()],
            other => {
                return Err(TopicParseError(format!(
                    "keywords of topic {raw_label:?} are not a list: {other}"
                )))
            }
        };
        if keywords.is_empty() {
            return Err(TopicParseError(format!("topic {raw_label:?} has no keywords")));
        }
        if !(2..=5).contains(&keywords.len()) {
            warnings.push(format!(
                "topic {label:?} has {} keywords (expected 2-5)",
                keywords.len()
            ));
        }
        let entry = topics.entry(label).or_default();
        for k in keywords {
            if !entry.contains(&k) {
                entry.push(k);
            }
        }
    }
    Ok(ParsedTopics { topics, warnings })
}
