//! Prompt templates for batch extraction and topic merging.
//!
//! Placeholders use `{name}` syntax and are substituted in a single pass, so
//! substituted values that happen to contain `{...}` are never expanded again.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use sha2::{Digest, Sha256};

pub const TOPIC_SYSTEM_TEMPLATE: &str = "Generate topics by simulating topic modeling on the given documents. Documents are survey responses to the question '{question}'. Each topic should preserve detail in context of the question and be fewer than 5 words. Create more abstract topics if no detail is lost, but ensure high granularity in context of the question. For each topic, provide a list of 2-5 relevant, meaningful keywords from the corresponding documents. Keywords should be diverse and not the same as the topic name. Return a JSON object where each topic is a key, and its keywords are a list of values.";

pub const TOPIC_USER_TEMPLATE: &str =
    "Write the results of simulating topic modeling for the following documents: {documents}";

/// Appended to the user prompt once earlier batches produced topics.
pub const CARRY_OVER_TEMPLATE: &str = "If possible, re-use the following topics: {topics}";

pub const MERGE_USER_TEMPLATE: &str = "De-duplicate the following topic modeling results by merging duplicates into one topic without mentioning removal: {topic_keywords}";

pub const MERGE_SYSTEM_TEMPLATE: &str = "De-duplicate the results of topic modeling of survey responses to the question {question}. The topic name is followed by relevant keywords. De-duplicate topics only if they have the same exact meaning. Merge duplicates into one topic, do not mention the removal. Each topic should contain fewer than 5 words. For each unique topic, merge duplicate topic keywords. Keywords should be diverse and not the same as the topic name. Make the topic name descriptive, human-readable and interpretable. Each word in the topic name should be separated by an underscore (_). Return a JSON object where each topic is a key, and its keywords are a list of values.";

/// Separator between the user prompt and the carry-over phrase.
pub const CARRY_OVER_SEPARATOR: &str = "\n";

/// Replaces each `{key}` in `template` with its value in one left-to-right pass.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (key, value) in values {
            let token_len = key.len() + 2;
            if tail.len() >= token_len
                && tail[1..].starts_with(key)
                && tail.as_bytes()[token_len - 1] == b'}'
            {
                out.push_str(value);
                rest = &tail[token_len..];
                continue 'scan;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

/// Documents are rendered as a JSON array of strings.
pub fn render_documents<S: AsRef<str>>(documents: &[S]) -> String {
    let docs: Vec<&str> = documents.iter().map(AsRef::as_ref).collect();
    serde_json::to_string(&docs).expect("strings serialize")
}

pub fn render_topic_list(topics: &[String]) -> String {
    serde_json::to_string(topics).expect("strings serialize")
}

pub fn render_topic_keywords(topics: &IndexMap<String, Vec<String>>) -> String {
    serde_json::to_string(topics).expect("map serializes")
}

/// `(system, user)` prompts for one extraction batch.
pub fn topic_prompts<S: AsRef<str>>(
    question: &str,
    documents: &[S],
    prior_topics: &[String],
) -> (String, String) {
    let system = fill(TOPIC_SYSTEM_TEMPLATE, &[("question", question)]);
    let mut user = fill(TOPIC_USER_TEMPLATE, &[("documents", &render_documents(documents))]);
    if !prior_topics.is_empty() {
        user.push_str(CARRY_OVER_SEPARATOR);
        user.push_str(&fill(CARRY_OVER_TEMPLATE, &[("topics", &render_topic_list(prior_topics))]));
    }
    (system, user)
}

/// `(system, user)` prompts for the merge stage.
pub fn merge_prompts(question: &str, raw_union: &IndexMap<String, Vec<String>>) -> (String, String) {
    let system = fill(MERGE_SYSTEM_TEMPLATE, &[("question", question)]);
    let user = fill(
        MERGE_USER_TEMPLATE,
        &[("topic_keywords", &render_topic_keywords(raw_union))],
    );
    (system, user)
}

/// SHA-256 of every template, keyed by template name.
pub fn fingerprints() -> BTreeMap<String, String> {
    [
        ("topic_system", TOPIC_SYSTEM_TEMPLATE),
        ("topic_user", TOPIC_USER_TEMPLATE),
        ("carry_over", CARRY_OVER_TEMPLATE),
        ("merge_system", MERGE_SYSTEM_TEMPLATE),
        ("merge_user", MERGE_USER_TEMPLATE),
    ]
    .into_iter()
    .map(|(name, t)| (name.to_owned(), hex::encode(Sha256::digest(t.as_bytes()))))
    .collect()
}
