//! Rater exports and their validation against a form.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::form::FormPayload;
use crate::responses::SurveyId;

// Nullable fields are still required keys: `deserialize_with` stops serde
// from treating an absent key as null.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicJudgment {
    pub topic_id: String,
    pub interpretable: bool,
    #[serde(deserialize_with = "Option::deserialize")]
    pub fits_question: Option<bool>,
    #[serde(deserialize_with = "Option::deserialize")]
    pub too_specific: Option<bool>,
}

impl TopicJudgment {
    /// Answers absent from a judgment must be exactly the ones the form
    /// hides: question 2 only for interpretable topics, question 3 only for
    /// fitting ones.
    pub fn gating_violation(&self) -> Option<&'static str> {
        match (self.interpretable, self.fits_question, self.too_specific) {
            (false, Some(_), _) => Some("fits_question answered for an uninterpretable topic"),
            (false, None, Some(_)) => Some("too_specific answered for an uninterpretable topic"),
            (true, None, _) => Some("fits_question missing for an interpretable topic"),
            (true, Some(false), Some(_)) => Some("too_specific answered for a topic that does not fit"),
            (true, Some(true), None) => Some("too_specific missing for a fitting topic"),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionRatings {
    pub question_id: String,
    pub judgments: Vec<TopicJudgment>,
    pub duplicate_groups: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingBundle {
    pub form_hash: String,
    #[serde(deserialize_with = "Option::deserialize")]
    pub rater_id: Option<String>,
    pub survey_id: SurveyId,
    pub questions: Vec<QuestionRatings>,
}

impl RatingBundle {
    /// Topics this rater placed in any duplicate group, per question.
    pub fn flagged_duplicates(&self) -> BTreeSet<&str> {
        self.questions
            .iter()
            .flat_map(|q| q.duplicate_groups.iter().flatten())
            .map(String::as_str)
            .collect()
    }
}

/// Checks a bundle against the form it claims to answer. Returns every
/// problem found rather than stopping at the first.
pub fn validate_bundle(bundle: &RatingBundle, form: &FormPayload) -> Vec<String> {
    let mut problems = Vec::new();
    if bundle.form_hash != form.form_hash {
        problems.push(format!(
            "form_hash {} does not match form {}",
            bundle.form_hash, form.form_hash
        ));
    }
    if bundle.survey_id != form.survey_id {
        problems.push(format!(
            "survey_id {} does not match form survey {}",
            bundle.survey_id, form.survey_id
        ));
    }
    let mut seen_questions = BTreeSet::new();
    for q in &bundle.questions {
        let qid = &q.question_id;
        if !seen_questions.insert(qid.as_str()) {
            problems.push(format!("question {qid} appears more than once"));
            continue;
        }
        let Some(fq) = form.question(qid) else {
            problems.push(format!("unknown question {qid}"));
            continue;
        };
        let known: BTreeSet<&str> = fq.topics.iter().map(|t| t.topic_id.as_str()).collect();
        let mut judged = BTreeSet::new();
        for j in &q.judgments {
            if !known.contains(j.topic_id.as_str()) {
                problems.push(format!("question {qid}: unknown topic {}", j.topic_id));
            }
            if !judged.insert(j.topic_id.as_str()) {
                problems.push(format!("question {qid}: topic {} judged more than once", j.topic_id));
            }
            if let Some(v) = j.gating_violation() {
                problems.push(format!("question {qid}: topic {}: {v}", j.topic_id));
            }
        }
        let mut grouped = BTreeSet::new();
        for (gi, group) in q.duplicate_groups.iter().enumerate() {
            if group.len() < 2 {
                problems.push(format!(
                    "question {qid}: duplicate group {gi} has {} member(s), at least 2 needed",
                    group.len()
                ));
            }
            for t in group {
                if !known.contains(t.as_str()) {
                    problems.push(format!("question {qid}: duplicate group {gi}: unknown topic {t}"));
                }
                if !grouped.insert(t.as_str()) {
                    problems.push(format!(
                        "question {qid}: topic {t} appears in more than one duplicate group"
                    ));
                }
            }
        }
    }
    problems
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedBundle {
    pub source: String,
    pub rater_id: Option<String>,
    pub diagnostics: Vec<String>,
}

/// A bundle read from disk, or the reason it could not be parsed.
#[derive(Debug)]
pub struct LoadedBundle {
    pub path: PathBuf,
    pub bundle: Result<RatingBundle, String>,
}

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct RatingsDirError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

/// Every `*.json` file in `dir`, in file-name order.
pub fn load_bundles(dir: &Path) -> Result<Vec<LoadedBundle>, RatingsDirError> {
    let err = |source| RatingsDirError { path: dir.to_path_buf(), source };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(err)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let text = std::fs::read_to_string(&path).map_err(|source| RatingsDirError {
                path: path.clone(),
                source,
            })?;
            let bundle = serde_json::from_str(&text).map_err(|e| e.to_string());
            Ok(LoadedBundle { path, bundle })
        })
        .collect()
}

/// Distinct form hashes across parsed bundles.
pub fn form_hashes(bundles: &[LoadedBundle]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for b in bundles.iter().filter_map(|b| b.bundle.as_ref().ok()) {
        *out.entry(b.form_hash.clone()).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::form::{payload_hash, FormQuestion, FormTopic};

    fn form() -> FormPayload {
        let questions = vec![FormQuestion {
            question_id: "q1".into(),
            question_text: "Q?".into(),
            topics: ["q1:a", "q1:b", "q1:c"]
                .iter()
                .map(|id| FormTopic { topic_id: (*id).into(), label: "L".into(), keywords: vec![] })
                .collect(),
        }];
        FormPayload {
            form_hash: payload_hash(SurveyId::RepositoryUrl, &questions),
            survey_id: SurveyId::RepositoryUrl,
            questions,
        }
    }

    fn j(id: &str, i: bool, f: Option<bool>, t: Option<bool>) -> TopicJudgment {
        TopicJudgment { topic_id: id.into(), interpretable: i, fits_question: f, too_specific: t }
    }

    fn bundle(judgments: Vec<TopicJudgment>, groups: Vec<Vec<&str>>) -> RatingBundle {
        RatingBundle {
            form_hash: form().form_hash,
            rater_id: Some("r".into()),
            survey_id: SurveyId::RepositoryUrl,
            questions: vec![QuestionRatings {
                question_id: "q1".into(),
                judgments,
                duplicate_groups: groups
                    .into_iter()
                    .map(|g| g.into_iter().map(String::from).collect())
                    .collect(),
            }],
        }
    }

    #[test]
    fn schema_roundtrip_uses_null() {
        let b = bundle(vec![j("q1:a", false, None, None)], vec![]);
        let json = serde_json::to_value(&b).unwrap();
        assert_eq!(json["questions"][0]["judgments"][0]["fits_question"], serde_json::Value::Null);
        let back: RatingBundle = serde_json::from_value(json).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn nullable_keys_are_still_required() {
        let mut json = serde_json::to_value(bundle(vec![j("q1:a", false, None, None)], vec![])).unwrap();
        json["questions"][0]["judgments"][0].as_object_mut().unwrap().remove("too_specific");
        assert!(serde_json::from_value::<RatingBundle>(json.clone()).is_err());
        json["questions"][0]["judgments"][0]["too_specific"] = serde_json::Value::Null;
        json["extra"] = serde_json::json!(1);
        assert!(serde_json::from_value::<RatingBundle>(json).is_err());
    }

    #[test]
    fn valid_bundle() {
        let b = bundle(
            vec![
                j("q1:a", true, Some(true), Some(false)),
                j("q1:b", false, None, None),
                j("q1:c", true, Some(false), None),
            ],
            vec![vec!["q1:a", "q1:b"]],
        );
        assert!(validate_bundle(&b, &form()).is_empty());
    }

    #[test]
    fn gating_violations() {
        for bad in [
            j("q1:a", false, Some(true), None),
            j("q1:a", true, None, None),
            j("q1:a", true, Some(false), Some(true)),
            j("q1:a", true, Some(true), None),
            j("q1:a", false, None, Some(false)),
        ] {
            assert!(bad.gating_violation().is_some(), "{bad:?}");
            assert_eq!(validate_bundle(&bundle(vec![bad], vec![]), &form()).len(), 1);
        }
    }

    #[test]
    fn unknown_and_repeated_topics() {
        let b = bundle(
            vec![j("q1:zzz", false, None, None), j("q1:a", false, None, None), j("q1:a", false, None, None)],
            vec![],
        );
        let problems = validate_bundle(&b, &form());
        assert!(problems.iter().any(|p| p.contains("unknown topic q1:zzz")));
        assert!(problems.iter().any(|p| p.contains("judged more than once")));
    }

    #[test]
    fn group_rules() {
        let b = bundle(vec![], vec![vec!["q1:a"], vec!["q1:a", "q1:b"], vec!["q1:x", "q1:c"]]);
        let problems = validate_bundle(&b, &form());
        assert_eq!(problems.len(), 3, "{problems:?}");
    }

    #[test]
    fn wrong_form_hash() {
        let mut b = bundle(vec![], vec![]);
        b.form_hash = "other".into();
        assert_eq!(validate_bundle(&b, &form()).len(), 1);
    }
}
