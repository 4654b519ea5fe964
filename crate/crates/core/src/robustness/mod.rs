//! Run-to-run consistency of merged topics: lexical overlap (Jaccard) and
//! semantic agreement (best-match cosine over label embeddings).

pub mod embed;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use embed::{cosine, EmbedError, Embedder, HashingEmbedder, OllamaEmbedder, OneHotEmbedder};

use crate::responses::SurveyId;
use crate::topics::{normalize_label, spaced_label, RunRecord};

pub const ROBUSTNESS_SCHEMA: &str = "linkstudy.robustness/1";

pub const COSINE_FOOTNOTE: &str = "Cosine: for each label of one run the best cosine match among the other run's labels is taken; the two directional means are averaged.";

#[derive(Debug, thiserror::Error)]
pub enum RobustnessError {
    #[error("question {question_id}: {runs} completed run(s) for survey {survey}, at least 2 needed")]
    InsufficientRuns {
        survey: SurveyId,
        question_id: String,
        runs: usize,
    },
    #[error("no archived runs for survey {0}")]
    NoRuns(SurveyId),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("embedder returned {got} vectors for {expected} labels")]
    EmbedCount { expected: usize, got: usize },
    #[error("embedding dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
}

/// |A∩B| / |A∪B|; two empty sets are identical (1.0).
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn directional(from: &[&Vec<f64>], to: &[&Vec<f64>]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|x| {
            to.iter()
                .map(|y| cosine(x, y))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    total / from.len() as f64
}

fn best_match(
    a: &BTreeSet<String>,
    b: &BTreeSet<String>,
    vectors: &HashMap<String, Vec<f64>>,
) -> f64 {
    if a == b {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let va: Vec<&Vec<f64>> = a.iter().map(|l| &vectors[l]).collect();
    let vb: Vec<&Vec<f64>> = b.iter().map(|l| &vectors[l]).collect();
    (directional(&va, &vb) + directional(&vb, &va)) / 2.0
}

/// Embeds every label once. Labels are embedded in their spaced form.
fn embed_labels<'a, I>(labels: I, embedder: &dyn Embedder) -> Result<HashMap<String, Vec<f64>>, RobustnessError>
where
    I: IntoIterator<Item = &'a String>,
{
    let unique: Vec<String> = labels.into_iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if unique.is_empty() {
        return Ok(HashMap::new());
    }
    let inputs: Vec<String> = unique.iter().map(|l| spaced_label(l)).collect();
    let vectors = embedder.embed(&inputs)?;
    if vectors.len() != unique.len() {
        return Err(RobustnessError::EmbedCount {
            expected: unique.len(),
            got: vectors.len(),
        });
    }
    let dim = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(RobustnessError::Dimension(dim, v.len()));
    }
    Ok(unique.into_iter().zip(vectors).collect())
}

/// Symmetric mean of best matches between two label sets. Identical sets
/// score 1.0, one empty set against a non-empty one scores 0.0.
pub fn semantic_similarity(
    a: &BTreeSet<String>,
    b: &BTreeSet<String>,
    embedder: &dyn Embedder,
) -> Result<f64, RobustnessError> {
    if a == b {
        return Ok(1.0);
    }
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let vectors = embed_labels(a.iter().chain(b), embedder)?;
    Ok(best_match(a, b, &vectors))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRobustness {
    pub question_id: String,
    pub run_count: usize,
    pub pair_count: usize,
    pub jaccard: f64,
    pub cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub schema: String,
    pub survey_id: SurveyId,
    pub embed_model: String,
    pub run_ids: Vec<String>,
    pub questions: Vec<QuestionRobustness>,
    /// Unweighted means over the questions.
    pub average_jaccard: f64,
    pub average_cosine: f64,
    pub footnote: String,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Pairwise statistics over every unordered pair of runs of `survey`.
/// Runs where a question failed do not count for that question.
pub fn robustness_report(
    runs: &[RunRecord],
    survey: SurveyId,
    embedder: &dyn Embedder,
) -> Result<RobustnessReport, RobustnessError> {
    let runs: Vec<&RunRecord> = runs.iter().filter(|r| r.survey_id == survey).collect();
    if runs.is_empty() {
        return Err(RobustnessError::NoRuns(survey));
    }
    let mut question_ids: Vec<&str> = Vec::new();
    for q in runs.iter().flat_map(|r| &r.questions) {
        if !question_ids.contains(&q.question_id.as_str()) {
            question_ids.push(&q.question_id);
        }
    }

    let mut rows = Vec::with_capacity(question_ids.len());
    for qid in question_ids {
        let sets: Vec<BTreeSet<String>> = runs
            .iter()
            .filter_map(|r| r.question(qid))
            .filter(|q| q.is_completed())
            .map(|q| q.merged.topics.keys().map(|l| normalize_label(l)).collect())
            .collect();
        if sets.len() < 2 {
            return Err(RobustnessError::InsufficientRuns {
                survey,
                question_id: qid.to_owned(),
                runs: sets.len(),
            });
        }
        let vectors = embed_labels(sets.iter().flatten(), embedder)?;
        let mut jac = Vec::new();
        let mut cos = Vec::new();
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                jac.push(jaccard(&sets[i], &sets[j]));
                cos.push(best_match(&sets[i], &sets[j], &vectors));
            }
        }
        rows.push(QuestionRobustness {
            question_id: qid.to_owned(),
            run_count: sets.len(),
            pair_count: jac.len(),
            jaccard: mean(jac.into_iter()),
            cosine: mean(cos.into_iter()),
        });
    }

    Ok(RobustnessReport {
        schema: ROBUSTNESS_SCHEMA.into(),
        survey_id: survey,
        embed_model: embedder.model_id().to_owned(),
        run_ids: runs.iter().map(|r| r.run_id.clone()).collect(),
        average_jaccard: mean(rows.iter().map(|r| r.jaccard)),
        average_cosine: mean(rows.iter().map(|r| r.cosine)),
        questions: rows,
        footnote: COSINE_FOOTNOTE.into(),
    })
}

pub fn render_text(report: &RobustnessReport) -> String {
    let width = report
        .questions
        .iter()
        .map(|q| q.question_id.len())
        .chain(["Question".len(), "Average".len()])
        .max()
        .unwrap_or(8);
    let mut out = String::new();
    let _ = writeln!(out, "Robustness: {} (embeddings: {})", report.survey_id, report.embed_model);
    let _ = writeln!(out, "{:<width$}  {:>5}  {:>7}  {:>6}", "Question", "Runs", "Jaccard", "Cosine");
    for q in &report.questions {
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>7.2}  {:>6.2}",
            q.question_id, q.run_count, q.jaccard, q.cosine
        );
    }
    let _ = writeln!(
        out,
        "{:<width$}  {:>5}  {:>7.2}  {:>6.2}",
        "Average", "", report.average_jaccard, report.average_cosine
    );
    let _ = writeln!(out, "\n{}", report.footnote);
    out
}
