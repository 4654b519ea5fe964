//! Helpers shared by the binary-driven tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use linkstudy::evaluation::{extract_payload, FormPayload, QuestionRatings, RatingBundle, TopicJudgment};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// The binary with the fixture config and `out` as output directory.
pub fn linkstudy(out: &Path) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_linkstudy"));
    cmd.env_remove("LINKSTUDY_LLM_URL")
        .env_remove("RUST_LOG")
        .arg("--out")
        .arg(out)
        .arg("--config")
        .arg(fixtures().join("linkstudy.toml"));
    cmd
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn linkstudy");
    assert!(
        out.status.success(),
        "{cmd:?} exited {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Ids of the archived runs, in file-name order.
pub fn run_ids(out: &Path) -> Vec<String> {
    let mut ids: Vec<String> = std::fs::read_dir(out.join("runs"))
        .map(|d| {
            d.filter_map(Result::ok)
                .filter_map(|e| e.path().file_stem().map(|s| s.to_string_lossy().into_owned()))
                .collect()
        })
        .unwrap_or_default();
    ids.sort();
    ids
}

/// A gating-consistent bundle whose answers vary with `rater` and the topic
/// position, the way a rater working through the form would produce.
pub fn synthetic_bundle(form: &FormPayload, rater: usize) -> RatingBundle {
    let questions = form
        .questions
        .iter()
        .map(|q| {
            let judgments = q
                .topics
                .iter()
                .enumerate()
                .map(|(t, topic)| {
                    let interpretable = !(t + rater).is_multiple_of(5);
                    let fits_question = interpretable.then_some(!(3 * t + rater).is_multiple_of(4));
                    let too_specific = (fits_question == Some(true)).then_some((t + 2 * rater).is_multiple_of(6));
                    TopicJudgment { topic_id: topic.topic_id.clone(), interpretable, fits_question, too_specific }
                })
                .collect();
            let duplicate_groups = if rater.is_multiple_of(2) && q.topics.len() >= 2 {
                vec![vec![q.topics[0].topic_id.clone(), q.topics[1].topic_id.clone()]]
            } else {
                vec![]
            };
            QuestionRatings { question_id: q.question_id.clone(), judgments, duplicate_groups }
        })
        .collect();
    RatingBundle {
        form_hash: form.form_hash.clone(),
        rater_id: Some(format!("rater-{rater}")),
        survey_id: form.survey_id,
        questions,
    }
}

/// Writes `raters` bundles answering the form at `form_html` into `dir`.
pub fn write_ratings(form_html: &Path, dir: &Path, raters: usize) -> FormPayload {
    let html = std::fs::read_to_string(form_html).expect("form written");
    let form = extract_payload(&html).expect("payload present");
    std::fs::create_dir_all(dir).unwrap();
    for r in 0..raters {
        let bundle = synthetic_bundle(&form, r);
        let text = serde_json::to_string_pretty(&bundle).unwrap();
        std::fs::write(dir.join(format!("rater-{r}.json")), text).unwrap();
    }
    form
}
