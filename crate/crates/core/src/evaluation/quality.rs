//! Pooled topic-quality proportions and per-dimension agreement.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::form::FormPayload;
use super::kappa::{binary_counts, randolph_kappa};
use super::ratings::{validate_bundle, LoadedBundle, RatingBundle, RejectedBundle, TopicJudgment};
use crate::responses::SurveyId;

pub const QUALITY_SCHEMA: &str = "linkstudy.quality/1";

/// How answers hidden by the form's gating enter the agreement statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatingMode {
    /// Hidden answers are missing; items keep only observed ratings.
    #[default]
    Missing,
    /// Hidden answers count as "no".
    TreatAsNo,
}

#[derive(Debug, thiserror::Error)]
pub enum QualityError {
    #[error("bundles answer different form versions: {0:?}")]
    MixedForms(Vec<String>),
    #[error("bundles answer form {bundles}, expected {form}")]
    FormMismatch { bundles: String, form: String },
    #[error("no valid rating bundles ({} rejected)", .0.len())]
    NoValidBundles(Vec<RejectedBundle>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KappaRow {
    pub interpretable: Option<f64>,
    pub fits_question: Option<f64>,
    pub too_specific: Option<f64>,
    pub duplicate: Option<f64>,
    /// Unweighted mean of the dimensions that could be computed.
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub question_id: String,
    pub topic_count: usize,
    /// Pooled (rater, topic) judgments.
    pub judgments: usize,
    pub meets_all: Option<f64>,
    pub uninterpretable: Option<f64>,
    pub not_fitting: Option<f64>,
    pub too_specific: Option<f64>,
    pub duplicate: Option<f64>,
    pub kappa: KappaRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub schema: String,
    pub survey_id: SurveyId,
    pub form_hash: String,
    pub gating_mode: GatingMode,
    pub raters: usize,
    pub questions: Vec<QualityRow>,
    pub overall: QualityRow,
    pub rejected: Vec<RejectedBundle>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Outcome {
    MeetsAll,
    Uninterpretable,
    NotFitting,
    TooSpecific,
}

fn outcome(j: &TopicJudgment) -> Outcome {
    match (j.interpretable, j.fits_question, j.too_specific) {
        (false, _, _) => Outcome::Uninterpretable,
        (true, Some(false), _) | (true, None, _) => Outcome::NotFitting,
        (true, Some(true), Some(true)) => Outcome::TooSpecific,
        (true, Some(true), _) => Outcome::MeetsAll,
    }
}

/// One rater's answer to one topic.
struct Rated<'a> {
    judgment: &'a TopicJudgment,
    flagged: bool,
}

fn row(
    question_id: &str,
    topic_count: usize,
    by_topic: &BTreeMap<&str, Vec<Rated<'_>>>,
    mode: GatingMode,
) -> QualityRow {
    let all: Vec<&Rated> = by_topic.values().flatten().collect();
    let n = all.len();
    let share = |pred: &dyn Fn(&Rated) -> bool| {
        (n > 0).then(|| all.iter().filter(|r| pred(r)).count() as f64 / n as f64)
    };
    let is = |o: Outcome| move |r: &Rated| outcome(r.judgment) == o;

    let gated = |v: Option<bool>| match mode {
        GatingMode::Missing => v,
        GatingMode::TreatAsNo => Some(v.unwrap_or(false)),
    };
    let dimension = |f: &dyn Fn(&Rated) -> Option<bool>| {
        let items: Vec<[u32; 2]> = by_topic
            .values()
            .map(|raters| binary_counts(raters.iter().filter_map(f)))
            .collect();
        randolph_kappa(&items, 2).expect("binary items")
    };
    let interpretable = dimension(&|r| Some(r.judgment.interpretable));
    let fits_question = dimension(&|r| gated(r.judgment.fits_question));
    let too_specific = dimension(&|r| gated(r.judgment.too_specific));
    let duplicate = dimension(&|r| Some(r.flagged));
    let present: Vec<f64> = [interpretable, fits_question, too_specific, duplicate]
        .into_iter()
        .flatten()
        .collect();
    let mean = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);

    QualityRow {
        question_id: question_id.to_owned(),
        topic_count,
        judgments: n,
        meets_all: share(&is(Outcome::MeetsAll)),
        uninterpretable: share(&is(Outcome::Uninterpretable)),
        not_fitting: share(&is(Outcome::NotFitting)),
        too_specific: share(&is(Outcome::TooSpecific)),
        duplicate: share(&|r| r.flagged),
        kappa: KappaRow { interpretable, fits_question, too_specific, duplicate, mean },
    }
}

fn check_versions<'a>(
    hashes: impl Iterator<Item = &'a str>,
    form: &FormPayload,
) -> Result<(), QualityError> {
    let distinct: BTreeSet<&str> = hashes.collect();
    if distinct.len() > 1 {
        return Err(QualityError::MixedForms(distinct.into_iter().map(String::from).collect()));
    }
    if let Some(h) = distinct.into_iter().next() {
        if h != form.form_hash {
            return Err(QualityError::FormMismatch {
                bundles: h.to_owned(),
                form: form.form_hash.clone(),
            });
        }
    }
    Ok(())
}

fn aggregate(
    candidates: Vec<(String, &RatingBundle)>,
    mut rejected: Vec<RejectedBundle>,
    form: &FormPayload,
    mode: GatingMode,
) -> Result<QualityReport, QualityError> {
    check_versions(candidates.iter().map(|(_, b)| b.form_hash.as_str()), form)?;
    let mut accepted = Vec::new();
    for (source, bundle) in candidates {
        let diagnostics = validate_bundle(bundle, form);
        if diagnostics.is_empty() {
            accepted.push(bundle);
        } else {
            log::warn!("rejecting {source}: {}", diagnostics.join("; "));
            rejected.push(RejectedBundle { source, rater_id: bundle.rater_id.clone(), diagnostics });
        }
    }
    if accepted.is_empty() {
        return Err(QualityError::NoValidBundles(rejected));
    }

    let flagged: Vec<BTreeSet<&str>> = accepted.iter().map(|b| b.flagged_duplicates()).collect();
    let mut overall: BTreeMap<&str, Vec<Rated>> = BTreeMap::new();
    let mut questions = Vec::with_capacity(form.questions.len());
    for fq in &form.questions {
        let mut by_topic: BTreeMap<&str, Vec<Rated>> = BTreeMap::new();
        for (bundle, flags) in accepted.iter().zip(&flagged) {
            let judged = bundle
                .questions
                .iter()
                .filter(|q| q.question_id == fq.question_id)
                .flat_map(|q| &q.judgments);
            for j in judged {
                by_topic.entry(j.topic_id.as_str()).or_default().push(Rated {
                    judgment: j,
                    flagged: flags.contains(j.topic_id.as_str()),
                });
            }
        }
        questions.push(row(&fq.question_id, fq.topics.len(), &by_topic, mode));
        overall.extend(by_topic);
    }
    let overall = row("overall", form.topic_count(), &overall, mode);

    Ok(QualityReport {
        schema: QUALITY_SCHEMA.into(),
        survey_id: form.survey_id,
        form_hash: form.form_hash.clone(),
        gating_mode: mode,
        raters: accepted.len(),
        questions,
        overall,
        rejected,
    })
}

/// Aggregates bundles answering `form`. Invalid bundles are excluded and
/// listed in `rejected`; bundles for different form versions are an error.
pub fn aggregate_ratings(
    bundles: &[RatingBundle],
    form: &FormPayload,
    mode: GatingMode,
) -> Result<QualityReport, QualityError> {
    let candidates = bundles
        .iter()
        .enumerate()
        .map(|(i, b)| (b.rater_id.clone().unwrap_or_else(|| format!("bundle {i}")), b))
        .collect();
    aggregate(candidates, Vec::new(), form, mode)
}

/// Like [`aggregate_ratings`], for bundles read from disk. Unparsable files
/// are rejected with the parser message.
pub fn aggregate_loaded(
    loaded: &[LoadedBundle],
    form: &FormPayload,
    mode: GatingMode,
) -> Result<QualityReport, QualityError> {
    let mut candidates = Vec::new();
    let mut rejected = Vec::new();
    for l in loaded {
        let source = l.path.display().to_string();
        match &l.bundle {
            Ok(b) => candidates.push((source, b)),
            Err(e) => rejected.push(RejectedBundle {
                source,
                rater_id: None,
                diagnostics: vec![format!("not a rating bundle: {e}")],
            }),
        }
    }
    aggregate(candidates, rejected, form, mode)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.2}"))
}

pub fn render_text(report: &QualityReport) -> String {
    let width = report
        .questions
        .iter()
        .map(|q| q.question_id.len())
        .chain(["Question".len(), "overall".len()])
        .max()
        .unwrap_or(8);
    let mode = match report.gating_mode {
        GatingMode::Missing => "hidden answers treated as missing",
        GatingMode::TreatAsNo => "hidden answers treated as no",
    };
    let mut out = String::new();
    let _ = writeln!(out, "Topic quality: {} ({} raters, {mode})", report.survey_id, report.raters);
    let header = ["Topics", "Meets all", "Uninterp.", "Not fitting", "Too specific", "Duplicate", "Kappa"];
    let _ = write!(out, "{:<width$}", "Question");
    for h in header {
        let _ = write!(out, "  {h:>12}");
    }
    out.push('\n');
    for r in report.questions.iter().chain(std::iter::once(&report.overall)) {
        let label = if r.question_id == "overall" { "Overall" } else { r.question_id.as_str() };
        let _ = write!(out, "{label:<width$}  {:>12}", r.topic_count);
        for v in [r.meets_all, r.uninterpretable, r.not_fitting, r.too_specific, r.duplicate, r.kappa.mean] {
            let _ = write!(out, "  {:>12}", cell(v));
        }
        out.push('\n');
    }
    let k = &report.overall.kappa;
    let _ = writeln!(
        out,
        "\nKappa by dimension (overall): interpretable {}, fits question {}, too specific {}, duplicate {}",
        cell(k.interpretable),
        cell(k.fits_question),
        cell(k.too_specific),
        cell(k.duplicate)
    );
    if !report.rejected.is_empty() {
        let _ = writeln!(out, "\nRejected bundles:");
        for r in &report.rejected {
            let _ = writeln!(out, "  {}: {}", r.source, r.diagnostics.join("; "));
        }
    }
    out
}
