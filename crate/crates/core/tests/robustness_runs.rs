//! Robustness statistics over pipeline runs that went through the archive.

use std::collections::BTreeSet;

use linkstudy::responses::{Denylist, SurveyId, SurveyResponse};
use linkstudy::robustness::{
    jaccard, robustness_report, semantic_similarity, HashingEmbedder, OneHotEmbedder, RobustnessError,
};
use linkstudy::topics::mock::{KeywordLlm, ScriptedLlm};
use linkstudy::topics::{run_pipeline, EngineConfig, QuestionSpec, RunArchive, RunRecord};
use proptest::prelude::*;

fn responses() -> Vec<SurveyResponse> {
    let d = Denylist::default();
    [
        ("q1", "I forgot to add the repository link"),
        ("q1", "The repository is private inside the company"),
        ("q1", "Company policy keeps the repository private"),
        ("q1", "n/a"),
        ("q2", "Nobody asked for a donation link"),
        ("q2", "Donations feel awkward for a small project"),
    ]
    .iter()
    .map(|(q, t)| SurveyResponse::new(SurveyId::RepositoryUrl, q, t, &d))
    .collect()
}

fn questions() -> Vec<QuestionSpec> {
    vec![
        QuestionSpec { question_id: "q1".into(), text: "Why no repository link?".into() },
        QuestionSpec { question_id: "q2".into(), text: "Why no donation link?".into() },
    ]
}

fn keyword_run() -> RunRecord {
    run_pipeline(&KeywordLlm::default(), SurveyId::RepositoryUrl, &responses(), &questions(), &EngineConfig::default())
}

/// One extraction batch and a merge per question, answering with `merged`.
fn scripted_run(merged: [&str; 3]) -> RunRecord {
    let topics = |labels: [&str; 3]| {
        let body: Vec<String> = labels.iter().map(|l| format!("\"{l}\": [\"k1\", \"k2\"]")).collect();
        format!("{{{}}}", body.join(", "))
    };
    let q1 = [&responses()[..4]].concat();
    let llm = ScriptedLlm::new([topics(["x", "y", "z"]), topics(merged)]);
    run_pipeline(&llm, SurveyId::RepositoryUrl, &q1, &questions()[..1], &EngineConfig::default())
}

#[test]
fn identical_runs_score_one() {
    let dir = tempfile::tempdir().unwrap();
    let archive = RunArchive::new(dir.path());
    for _ in 0..4 {
        archive.append(&keyword_run()).unwrap();
    }
    let runs = archive.for_survey(SurveyId::RepositoryUrl).unwrap();
    assert_eq!(runs.len(), 4);
    let report = robustness_report(&runs, SurveyId::RepositoryUrl, &HashingEmbedder::default()).unwrap();
    for q in &report.questions {
        assert_eq!((q.run_count, q.pair_count), (4, 6));
        assert!((q.jaccard - 1.0).abs() < 1e-12 && (q.cosine - 1.0).abs() < 1e-12, "{q:?}");
    }
    assert_eq!(report.run_ids.len(), 4);
}

#[test]
fn one_label_swapped() {
    let runs = [scripted_run(["a", "b", "c"]), scripted_run(["a", "b", "d"])];
    let report = robustness_report(&runs, SurveyId::RepositoryUrl, &OneHotEmbedder::new(16)).unwrap();
    let q = &report.questions[0];
    assert!((q.jaccard - 0.5).abs() <= 1e-6);
    assert!((q.cosine - 2.0 / 3.0).abs() <= 1e-6);
    assert_eq!(report.embed_model, "one-hot");
}

#[test]
fn labels_compare_after_normalization() {
    let runs = [scripted_run(["Share_Code", "b", "c"]), scripted_run(["share code", "B", "c"])];
    let report = robustness_report(&runs, SurveyId::RepositoryUrl, &OneHotEmbedder::new(16)).unwrap();
    assert!((report.average_jaccard - 1.0).abs() < 1e-12);
}

#[test]
fn failed_questions_do_not_count() {
    let mut broken = scripted_run(["a", "b", "c"]);
    let llm = ScriptedLlm::new(["not json", "still not", "nope"]);
    let failed = run_pipeline(&llm, SurveyId::RepositoryUrl, &responses()[..4], &questions()[..1], &EngineConfig::default());
    assert!(!failed.complete);
    let good = scripted_run(["a", "b", "c"]);
    let err = robustness_report(&[good.clone(), failed.clone()], SurveyId::RepositoryUrl, &OneHotEmbedder::new(8)).unwrap_err();
    assert!(matches!(err, RobustnessError::InsufficientRuns { runs: 1, .. }), "{err}");

    broken.run_id = "other".into();
    let report = robustness_report(&[good, failed, broken], SurveyId::RepositoryUrl, &OneHotEmbedder::new(8)).unwrap();
    assert_eq!(report.questions[0].run_count, 2);
}

#[test]
fn other_surveys_are_ignored() {
    let err = robustness_report(&[keyword_run()], SurveyId::DonationPlatformUrl, &OneHotEmbedder::new(8)).unwrap_err();
    assert!(matches!(err, RobustnessError::NoRuns(SurveyId::DonationPlatformUrl)));
}

fn label_set() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set("[a-e]{1,2}", 0..6)
}

proptest! {
    #[test]
    fn jaccard_bounds_and_symmetry(a in label_set(), b in label_set()) {
        let j = jaccard(&a, &b);
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert_eq!(j, jaccard(&b, &a));
        prop_assert_eq!(jaccard(&a, &a), 1.0);
        prop_assert_eq!(j == 1.0, a == b);
    }

    #[test]
    fn cosine_bounds_and_symmetry(a in label_set(), b in label_set()) {
        let e = HashingEmbedder::default();
        let s = semantic_similarity(&a, &b, &e).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&s));
        prop_assert!((s - semantic_similarity(&b, &a, &e).unwrap()).abs() < 1e-12);
        prop_assert_eq!(semantic_similarity(&a, &a, &e).unwrap(), 1.0);
    }

    #[test]
    fn orthogonal_cosine_equals_overlap_share(a in label_set(), b in label_set()) {
        // With one-hot vectors a label only matches itself, so each direction
        // scores the share of its labels found in the other set.
        prop_assume!(!a.is_empty() && !b.is_empty() && a != b);
        let s = semantic_similarity(&a, &b, &OneHotEmbedder::new(64)).unwrap();
        let common = a.intersection(&b).count() as f64;
        let expected = (common / a.len() as f64 + common / b.len() as f64) / 2.0;
        prop_assert!((s - expected).abs() < 1e-12);
    }
}
