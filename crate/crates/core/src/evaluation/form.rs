//! Self-contained HTML rating form.
//!
//! The form carries its topic data in a `<script type="application/json"
//! id="linkstudy-payload">` element. The UI bundle reads that element, renders
//! the questionnaire and exports a [`RatingBundle`](super::RatingBundle).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::responses::SurveyId;
use crate::topics::{normalize_label, render_label, RunRecord};

pub const PAYLOAD_ELEMENT_ID: &str = "linkstudy-payload";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormTopic {
    pub topic_id: String,
    pub label: String,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormQuestion {
    pub question_id: String,
    pub question_text: String,
    pub topics: Vec<FormTopic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormPayload {
    pub form_hash: String,
    pub survey_id: SurveyId,
    pub questions: Vec<FormQuestion>,
}

impl FormPayload {
    pub fn topic_count(&self) -> usize {
        self.questions.iter().map(|q| q.topics.len()).sum()
    }

    pub fn question(&self, question_id: &str) -> Option<&FormQuestion> {
        self.questions.iter().find(|q| q.question_id == question_id)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FormError {
    #[error("no topics to evaluate")]
    NoTopics,
    #[error("UI bundle not found at {0}; build the evaluation form UI component first (it produces a single JavaScript file) or pass its path")]
    MissingBundle(PathBuf),
    #[error("reading UI bundle {path}: {source}")]
    Bundle {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("UI bundle references external resources: {0}")]
    ExternalReference(String),
    #[error("no rating form payload found in document")]
    NoPayload,
    #[error("rating form payload is invalid: {0}")]
    InvalidPayload(String),
}

/// SHA-256 over the canonical JSON of survey and questions.
pub fn payload_hash(survey_id: SurveyId, questions: &[FormQuestion]) -> String {
    let canonical = serde_json::to_vec(&(survey_id, questions)).expect("payload serializes");
    hex::encode(Sha256::digest(&canonical))
}

/// Topic ids are `<question_id>:<normalized label>`.
pub fn topic_id(question_id: &str, label: &str) -> String {
    format!("{question_id}:{}", normalize_label(label))
}

/// Payload for the completed questions of a run, topics in merged order.
pub fn build_payload(run: &RunRecord) -> Result<FormPayload, FormError> {
    let questions: Vec<FormQuestion> = run
        .questions
        .iter()
        .filter(|q| q.is_completed())
        .map(|q| FormQuestion {
            question_id: q.question_id.clone(),
            question_text: q.question_text.clone(),
            topics: q
                .merged
                .topics
                .iter()
                .map(|(label, keywords)| FormTopic {
                    topic_id: topic_id(&q.question_id, label),
                    label: render_label(label),
                    keywords: keywords.clone(),
                })
                .collect(),
        })
        .collect();
    if questions.iter().all(|q| q.topics.is_empty()) {
        return Err(FormError::NoTopics);
    }
    Ok(FormPayload {
        form_hash: payload_hash(run.survey_id, &questions),
        survey_id: run.survey_id,
        questions,
    })
}

pub fn load_ui_bundle(path: &Path) -> Result<String, FormError> {
    if !path.is_file() {
        return Err(FormError::MissingBundle(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|source| FormError::Bundle {
        path: path.to_path_buf(),
        source,
    })
}

/// Rejects bundles that would load anything over the network.
pub fn check_self_contained(bundle: &str) -> Result<(), FormError> {
    let patterns = [
        r#"(?i)\b(?:src|href|action|poster|data)\s*=\s*["']?\s*(?:https?:)?//"#,
        r#"(?i)url\(\s*["']?\s*(?:https?:)?//"#,
        r#"(?i)@import\s"#,
        r#"(?i)\b(?:fetch|XMLHttpRequest|WebSocket|EventSource|importScripts)\s*\("#,
        r#"(?i)\bnew\s+(?:XMLHttpRequest|WebSocket|EventSource)\b"#,
    ];
    for p in patterns {
        let re = Regex::new(p).expect("valid pattern");
        if let Some(m) = re.find(bundle) {
            return Err(FormError::ExternalReference(m.as_str().trim().to_owned()));
        }
    }
    Ok(())
}

/// JSON safe to place inside a script element. Escaping `/` also keeps
/// URLs mentioned in topic keywords from appearing verbatim.
fn script_json(payload: &FormPayload) -> String {
    let json = serde_json::to_string(payload).expect("payload serializes");
    let mut out = String::with_capacity(json.len() + 32);
    for c in json.chars() {
        match c {
            '<' => out.push_str("\\u003c"),
            '>' => out.push_str("\\u003e"),
            '&' => out.push_str("\\u0026"),
            '/' => out.push_str("\\/"),
            '\u{2028}' => out.push_str("\\u2028"),
            '\u{2029}' => out.push_str("\\u2029"),
            c => out.push(c),
        }
    }
    out
}

fn html_escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

const STYLE: &str = "body{font-family:system-ui,sans-serif;max-width:60rem;margin:2rem auto;padding:0 1rem;line-height:1.5}\
section.guide{background:#f4f4f4;padding:1rem 1.5rem;border-radius:6px}\
noscript{color:#a00}";

fn guide(payload: &FormPayload) -> String {
    let mut g = String::new();
    let _ = write!(
        g,
        "<section class=\"guide\" id=\"guide\">\n<h1>Topic evaluation</h1>\n\
<p>Survey: <code>{survey}</code>. You will rate {n} topics across {q} questions. \
Each topic was generated automatically from free-text survey answers.</p>\n\
<ol>\n\
<li><strong>Is this topic interpretable?</strong> Answer yes if you understand what the topic name means.</li>\n\
<li><strong>Does the topic fit the question?</strong> Shown only for interpretable topics.</li>\n\
<li><strong>Is the topic too specific?</strong> Shown only for topics that fit the question. A topic is too specific if it only covers a single answer or a detail that hardly generalizes.</li>\n\
</ol>\n\
<p>After rating the topics of a question, group topics that mean the same thing as duplicates. Leave the duplicates empty if there are none.</p>\n\
<p>When you are done, export your ratings as a JSON file and send it back. You can re-import a saved file to resume later. \
The form works offline; nothing is sent anywhere.</p>\n</section>\n",
        survey = html_escape(payload.survey_id.as_str()),
        n = payload.topic_count(),
        q = payload.questions.len(),
    );
    g
}

/// Renders the complete form. Output depends only on the inputs.
pub fn render_form(payload: &FormPayload, ui_bundle: &str) -> Result<String, FormError> {
    if payload.topic_count() == 0 {
        return Err(FormError::NoTopics);
    }
    check_self_contained(ui_bundle)?;
    let bundle = ui_bundle.replace("</script", "<\\/script");
    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    html.push_str("<meta name=\"viewport\" content=\"width=device-width, initial-scale=1\">\n");
    let _ = writeln!(html, "<meta name=\"form-hash\" content=\"{}\">", payload.form_hash);
    let _ = writeln!(
        html,
        "<title>Topic evaluation: {}</title>",
        html_escape(payload.survey_id.as_str())
    );
    let _ = writeln!(html, "<style>{STYLE}</style>\n</head>\n<body>");
    html.push_str(&guide(payload));
    html.push_str("<noscript>This form needs JavaScript enabled.</noscript>\n");
    html.push_str("<main id=\"app\"></main>\n");
    let _ = writeln!(
        html,
        "<script type=\"application/json\" id=\"{PAYLOAD_ELEMENT_ID}\">{}</script>",
        script_json(payload)
    );
    let _ = writeln!(html, "<script>\n{bundle}\n</script>\n</body>\n</html>");
    Ok(html)
}

#[derive(Debug, Clone)]
pub struct GeneratedForm {
    pub html: String,
    pub payload: FormPayload,
}

pub fn generate_form(run: &RunRecord, ui_bundle: &str) -> Result<GeneratedForm, FormError> {
    let payload = build_payload(run)?;
    let html = render_form(&payload, ui_bundle)?;
    Ok(GeneratedForm { html, payload })
}

/// Reads the payload back out of a generated form and checks its hash.
pub fn extract_payload(html: &str) -> Result<FormPayload, FormError> {
    let open = format!("<script type=\"application/json\" id=\"{PAYLOAD_ELEMENT_ID}\">");
    let start = html.find(&open).ok_or(FormError::NoPayload)? + open.len();
    let len = html[start..].find("</script>").ok_or(FormError::NoPayload)?;
    let payload: FormPayload = serde_json::from_str(&html[start..start + len])
        .map_err(|e| FormError::InvalidPayload(e.to_string()))?;
    let expected = payload_hash(payload.survey_id, &payload.questions);
    if payload.form_hash != expected {
        return Err(FormError::InvalidPayload(format!(
            "form_hash {} does not match content hash {expected}",
            payload.form_hash
        )));
    }
    Ok(payload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::{QuestionRun, QuestionStatus, Stage, TopicMap};

    pub(crate) fn run_with(topics: &[(&str, &[&str])]) -> RunRecord {
        let json = serde_json::json!({
            "schema": "linkstudy.run/1", "run_id": "r1",
            "started_at": "2024-01-01T00:00:00Z", "finished_at": "2024-01-01T00:00:00Z",
            "survey_id": "repository_url", "model_id": "m", "seed": 1, "temperature": 0.0,
            "batch_size": 10, "retry_limit": 3, "prompt_fingerprints": {}, "questions": [],
            "complete": true
        });
        let mut run: RunRecord = serde_json::from_value(json).unwrap();
        for (qid, labels) in topics {
            let mut merged = TopicMap::empty(qid, Stage::Merged);
            for l in *labels {
                merged.union_topic(l, &["k1".into(), "https://example.org/x".into()]);
            }
            run.questions.push(QuestionRun {
                question_id: (*qid).into(),
                question_text: format!("Why {qid}?"),
                status: QuestionStatus::Completed,
                batches: 1,
                documents: 1,
                raw: TopicMap::empty(qid, Stage::Raw),
                merged,
                warnings: vec![],
                exchanges: vec![],
            });
        }
        run
    }

    const BUNDLE: &str = "document.getElementById('app').textContent = 'x';";

    #[test]
    fn two_questions_six_topics() {
        let run = run_with(&[("q1", &["a_b", "c", "d"]), ("q2", &["e", "f", "g"])]);
        let form = generate_form(&run, BUNDLE).unwrap();
        let back = extract_payload(&form.html).unwrap();
        assert_eq!(back.topic_count(), 6);
        assert_eq!(back, form.payload);
        assert_eq!(back.questions[0].topics[0].topic_id, "q1:a_b");
        assert_eq!(back.questions[0].topics[0].label, "A B");
    }

    #[test]
    fn no_network_references() {
        let run = run_with(&[("q1", &["a"])]);
        let html = generate_form(&run, BUNDLE).unwrap().html;
        assert!(!html.contains("http://") && !html.contains("https://"));
    }

    #[test]
    fn deterministic() {
        let run = run_with(&[("q1", &["a", "b"])]);
        assert_eq!(
            generate_form(&run, BUNDLE).unwrap().html,
            generate_form(&run, BUNDLE).unwrap().html
        );
    }

    #[test]
    fn empty_topics_rejected() {
        let run = run_with(&[("q1", &[])]);
        assert!(matches!(generate_form(&run, BUNDLE), Err(FormError::NoTopics)));
    }

    #[test]
    fn script_injection_neutralized() {
        let run = run_with(&[("q1", &["</script><b>"])]);
        let html = generate_form(&run, "var s = '</script>';").unwrap().html;
        assert_eq!(html.matches("</script>").count(), 2);
        assert!(extract_payload(&html).is_ok());
    }

    #[test]
    fn external_references_rejected() {
        assert!(check_self_contained("img.src = 'x'; // see https://example.org").is_ok());
        assert!(check_self_contained("<img src=\"https://cdn/x.png\">").is_err());
        assert!(check_self_contained("fetch('/api')").is_err());
        assert!(check_self_contained("a{background:url(//cdn/x)}").is_err());
    }

    #[test]
    fn missing_bundle_message() {
        let err = load_ui_bundle(Path::new("/nonexistent/form.js")).unwrap_err();
        assert!(err.to_string().contains("build the evaluation form UI component"));
    }

    #[test]
    fn tampered_payload_detected() {
        let run = run_with(&[("q1", &["a"])]);
        let html = generate_form(&run, BUNDLE).unwrap().html.replace("\"label\":\"A\"", "\"label\":\"Z\"");
        assert!(matches!(extract_payload(&html), Err(FormError::InvalidPayload(_))));
    }
}
