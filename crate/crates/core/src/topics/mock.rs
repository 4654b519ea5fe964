//! Offline LLM stand-ins for tests, examples and `--mock` runs.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;

use indexmap::IndexMap;

use super::llm::{LlmClient, LlmError, LlmRequest};
use super::normalize_label;

/// Replays canned answers in order and records every request.
pub struct ScriptedLlm {
    answers: Mutex<VecDeque<String>>,
    seen: Mutex<Vec<LlmRequest>>,
}

impl ScriptedLlm {
    pub fn new<I, S>(answers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            answers: Mutex::new(answers.into_iter().map(Into::into).collect()),
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<LlmRequest> {
        self.seen.lock().expect("lock").clone()
    }

    pub fn remaining(&self) -> usize {
        self.answers.lock().expect("lock").len()
    }
}

impl LlmClient for ScriptedLlm {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        self.seen.lock().expect("lock").push(request.clone());
        self.answers
            .lock()
            .expect("lock")
            .pop_front()
            .ok_or_else(|| LlmError::Unavailable("scripted answers exhausted".into()))
    }
}

/// Answers by calling a closure.
pub struct FnLlm<F>(F);

impl<F> FnLlm<F>
where
    F: Fn(&LlmRequest) -> Result<String, LlmError> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self(f)
    }
}

impl<F> LlmClient for FnLlm<F>
where
    F: Fn(&LlmRequest) -> Result<String, LlmError> + Send + Sync,
{
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        (self.0)(request)
    }
}

const STOPWORDS: &[&str] = &[
    "about", "after", "also", "because", "been", "being", "cannot", "could", "does", "doing",
    "dont", "from", "have", "having", "into", "just", "know", "like", "make", "more", "most",
    "much", "need", "only", "other", "over", "really", "same", "should", "some", "such", "than",
    "that", "their", "them", "then", "there", "these", "they", "thing", "things", "this", "those",
    "very", "want", "were", "what", "when", "where", "which", "while", "will", "with", "would",
    "your",
];

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .map(str::to_lowercase)
        .filter(|w| w.chars().count() >= 4 && !STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// Deterministic word-frequency heuristic that speaks the same JSON protocol
/// as a real model. Useful for exercising the pipeline without a server.
#[derive(Debug, Clone)]
pub struct KeywordLlm {
    pub max_topics: usize,
}

impl Default for KeywordLlm {
    fn default() -> Self {
        Self { max_topics: 3 }
    }
}

/// Text after the first `marker`, up to the end of that line.
fn payload_after<'a>(text: &'a str, marker: &str) -> Option<&'a str> {
    let start = text.find(marker)? + marker.len();
    Some(text[start..].lines().next().unwrap_or(""))
}

impl KeywordLlm {
    fn extract(&self, user: &str) -> Result<String, LlmError> {
        let docs: Vec<String> = payload_after(user, "documents: ")
            .and_then(|p| serde_json::from_str(p).ok())
            .ok_or_else(|| LlmError::Protocol("no document list in prompt".into()))?;
        let prior: Vec<String> = payload_after(user, "re-use the following topics: ")
            .and_then(|p| serde_json::from_str(p).ok())
            .unwrap_or_default();

        let tokenized: Vec<Vec<String>> = docs.iter().map(|d| words(d)).collect();
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in &tokenized {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for w in seen {
                *df.entry(w).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = df.iter().map(|(w, c)| (*w, *c)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

        let mut out: IndexMap<String, Vec<String>> = IndexMap::new();
        for (word, _) in ranked.iter().take(self.max_topics) {
            let label = prior
                .iter()
                .find(|p| p.to_lowercase() == *word)
                .cloned()
                .unwrap_or_else(|| super::render_label(word));
            let mut co: BTreeMap<&str, usize> = BTreeMap::new();
            for doc in tokenized.iter().filter(|d| d.iter().any(|w| w == word)) {
                for w in doc.iter().filter(|w| w != word) {
                    *co.entry(w).or_default() += 1;
                }
            }
            let mut co: Vec<(&str, usize)> = co.into_iter().collect();
            co.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            let mut keywords: Vec<String> = co.iter().take(3).map(|(w, _)| (*w).to_owned()).collect();
            if keywords.len() < 2 {
                keywords.push((*word).to_owned());
            }
            out.insert(label, keywords);
        }
        if out.is_empty() {
            out.insert("Other".into(), vec!["misc".into(), "unspecified".into()]);
        }
        Ok(serde_json::to_string(&out).expect("map serializes"))
    }

    fn merge(&self, user: &str) -> Result<String, LlmError> {
        let start = user
            .find('{')
            .ok_or_else(|| LlmError::Protocol("no topic object in prompt".into()))?;
        let raw: IndexMap<String, Vec<String>> = serde_json::from_str(&user[start..])
            .map_err(|e| LlmError::Protocol(e.to_string()))?;
        let mut out: IndexMap<String, Vec<String>> = IndexMap::new();
        for (label, keywords) in raw {
            let entry = out.entry(normalize_label(&label)).or_default();
            for k in keywords {
                if entry.len() < 5 && !entry.contains(&k) {
                    entry.push(k);
                }
            }
        }
        Ok(serde_json::to_string(&out).expect("map serializes"))
    }
}

impl LlmClient for KeywordLlm {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        if request.system.starts_with("De-duplicate") {
            self.merge(&request.user)
        } else {
            self.extract(&request.user)
        }
    }
}
