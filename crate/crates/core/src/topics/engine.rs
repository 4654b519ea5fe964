use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::llm::{LlmClient, LlmError, LlmRequest};
use super::prompts;
use super::{parse_topic_json, ParsedTopics, Stage, TopicMap};
use crate::parallel::bounded_map;
use crate::responses::{SurveyId, SurveyResponse};

pub const RUN_SCHEMA: &str = "linkstudy.run/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub model_id: String,
    pub seed: u64,
    pub temperature: f64,
    pub batch_size: usize,
    /// Attempts per LLM call, including the first.
    pub retry_limit: usize,
    pub json_output: bool,
    /// Questions processed at the same time. Batches within a question are
    /// always sequential.
    pub question_parallelism: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            model_id: "llama3.3:70b".into(),
            seed: 0,
            temperature: 0.0,
            batch_size: 10,
            retry_limit: 3,
            json_output: true,
            question_parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub system_prompt: String,
    pub user_prompt: String,
    pub response_text: String,
    pub attempt: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("batch size must be at least 1")]
    BatchSize,
    #[error("malformed LLM output after {attempts} attempts: {message}")]
    MalformedOutput {
        attempts: usize,
        message: String,
        response_text: String,
    },
    #[error("LLM call failed after {attempts} attempts: {source}")]
    Llm {
        attempts: usize,
        #[source]
        source: LlmError,
    },
}

/// Splits responses into consecutive batches, skipping placeholders.
pub fn make_batches(
    responses: &[SurveyResponse],
    batch_size: usize,
) -> Result<Vec<Vec<&SurveyResponse>>, EngineError> {
    if batch_size == 0 {
        return Err(EngineError::BatchSize);
    }
    let kept: Vec<&SurveyResponse> = responses.iter().filter(|r| !r.is_placeholder).collect();
    Ok(kept.chunks(batch_size).map(<[_]>::to_vec).collect())
}

/// Sends the same prompt until the answer parses or attempts run out.
/// `exchanges` receives every attempt, including failed ones.
fn call_with_retry(
    client: &dyn LlmClient,
    config: &EngineConfig,
    system: String,
    user: String,
    stage: Stage,
    exchanges: &mut Vec<LlmExchange>,
) -> Result<ParsedTopics, EngineError> {
    let request = LlmRequest {
        model: config.model_id.clone(),
        system,
        user,
        seed: config.seed,
        temperature: config.temperature,
        json_output: config.json_output,
    };
    let attempts = config.retry_limit.max(1);
    let mut last_err = None;
    for attempt in 1..=attempts {
        match client.complete(&request) {
            Ok(text) => {
                exchanges.push(LlmExchange {
                    system_prompt: request.system.clone(),
                    user_prompt: request.user.clone(),
                    response_text: text.clone(),
                    attempt,
                });
                match parse_topic_json(&text, stage) {
                    Ok(parsed) => return Ok(parsed),
                    Err(e) => {
                        log::warn!("attempt {attempt}/{attempts}: {e}");
                        last_err = Some(EngineError::MalformedOutput {
                            attempts: attempt,
                            message: e.0,
                            response_text: text,
                        });
                    }
                }
            }
            Err(e) => {
                log::warn!("attempt {attempt}/{attempts}: {e}");
                last_err = Some(EngineError::Llm {
                    attempts: attempt,
                    source: e,
                });
            }
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn call(
    client: &dyn LlmClient,
    config: &EngineConfig,
    system: String,
    user: String,
    stage: Stage,
) -> (Result<ParsedTopics, EngineError>, Vec<LlmExchange>) {
    let mut exchanges = Vec::new();
    let result = call_with_retry(client, config, system, user, stage, &mut exchanges);
    (result, exchanges)
}

#[derive(Debug)]
pub struct BatchResult {
    pub topics: Result<TopicMap, EngineError>,
    pub warnings: Vec<String>,
    pub exchanges: Vec<LlmExchange>,
}

/// Extracts topics for one batch. The carry-over phrase is appended only
/// when `prior_topics` is non-empty.
pub fn extract_topics_batch<S: AsRef<str>>(
    client: &dyn LlmClient,
    config: &EngineConfig,
    question_id: &str,
    question_text: &str,
    documents: &[S],
    prior_topics: &[String],
) -> BatchResult {
    let (system, user) = prompts::topic_prompts(question_text, documents, prior_topics);
    let (result, exchanges) = call(client, config, system, user, Stage::Raw);
    finish(result, exchanges, question_id, Stage::Raw)
}

fn finish(
    result: Result<ParsedTopics, EngineError>,
    exchanges: Vec<LlmExchange>,
    question_id: &str,
    stage: Stage,
) -> BatchResult {
    match result {
        Ok(parsed) => BatchResult {
            topics: Ok(TopicMap {
                question_id: question_id.to_owned(),
                stage,
                topics: parsed.topics,
            }),
            warnings: parsed.warnings,
            exchanges,
        },
        Err(e) => BatchResult {
            topics: Err(e),
            warnings: Vec::new(),
            exchanges,
        },
    }
}

/// Runs the merge stage over the accumulated raw topics of one question.
/// An empty union skips the LLM call entirely.
pub fn merge_topics(
    client: &dyn LlmClient,
    config: &EngineConfig,
    raw_union: &TopicMap,
    question_text: &str,
) -> BatchResult {
    if raw_union.is_empty() {
        return BatchResult {
            topics: Ok(TopicMap::empty(&raw_union.question_id, Stage::Merged)),
            warnings: Vec::new(),
            exchanges: Vec::new(),
        };
    }
    let (system, user) = prompts::merge_prompts(question_text, &raw_union.topics);
    let (result, exchanges) = call(client, config, system, user, Stage::Merged);
    finish(result, exchanges, &raw_union.question_id, Stage::Merged)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub question_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum QuestionStatus {
    Completed,
    Failed {
        stage: Stage,
        /// Zero-based batch index for extraction failures.
        batch_index: Option<usize>,
        message: String,
        response_text: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRun {
    pub question_id: String,
    pub question_text: String,
    pub status: QuestionStatus,
    pub batches: usize,
    pub documents: usize,
    pub raw: TopicMap,
    pub merged: TopicMap,
    pub warnings: Vec<String>,
    pub exchanges: Vec<LlmExchange>,
}

impl QuestionRun {
    pub fn is_completed(&self) -> bool {
        self.status == QuestionStatus::Completed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: String,
    pub run_id: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub survey_id: SurveyId,
    pub model_id: String,
    pub seed: u64,
    pub temperature: f64,
    pub batch_size: usize,
    pub retry_limit: usize,
    pub prompt_fingerprints: BTreeMap<String, String>,
    pub questions: Vec<QuestionRun>,
    /// False when any question failed.
    pub complete: bool,
}

impl RunRecord {
    pub fn question(&self, question_id: &str) -> Option<&QuestionRun> {
        self.questions.iter().find(|q| q.question_id == question_id)
    }
}

fn failure(stage: Stage, batch_index: Option<usize>, err: &EngineError) -> QuestionStatus {
    let response_text = match err {
        EngineError::MalformedOutput { response_text, .. } => Some(response_text.clone()),
        _ => None,
    };
    QuestionStatus::Failed {
        stage,
        batch_index,
        message: err.to_string(),
        response_text,
    }
}

/// Processes one question: batches strictly in order, each seeing the
/// topics accumulated from the batches before it, then one merge call.
pub fn run_question(
    client: &dyn LlmClient,
    config: &EngineConfig,
    question: &QuestionSpec,
    responses: &[SurveyResponse],
) -> QuestionRun {
    let relevant: Vec<SurveyResponse> = responses
        .iter()
        .filter(|r| r.question_id == question.question_id)
        .cloned()
        .collect();
    let mut run = QuestionRun {
        question_id: question.question_id.clone(),
        question_text: question.text.clone(),
        status: QuestionStatus::Completed,
        batches: 0,
        documents: relevant.iter().filter(|r| !r.is_placeholder).count(),
        raw: TopicMap::empty(&question.question_id, Stage::Raw),
        merged: TopicMap::empty(&question.question_id, Stage::Merged),
        warnings: Vec::new(),
        exchanges: Vec::new(),
    };
    let batches = match make_batches(&relevant, config.batch_size) {
        Ok(b) => b,
        Err(e) => {
            run.status = failure(Stage::Raw, None, &e);
            return run;
        }
    };
    run.batches = batches.len();
    for (index, batch) in batches.iter().enumerate() {
        let documents: Vec<&str> = batch.iter().map(|r| r.cleaned_text.as_str()).collect();
        let prior = run.raw.labels();
        let result = extract_topics_batch(
            client,
            config,
            &question.question_id,
            &question.text,
            &documents,
            &prior,
        );
        run.exchanges.extend(result.exchanges);
        run.warnings.extend(result.warnings);
        match result.topics {
            Ok(map) => {
                for (label, keywords) in &map.topics {
                    run.raw.union_topic(label, keywords);
                }
            }
            Err(e) => {
                run.status = failure(Stage::Raw, Some(index), &e);
                return run;
            }
        }
    }
    let merged = merge_topics(client, config, &run.raw, &question.text);
    run.exchanges.extend(merged.exchanges);
    run.warnings.extend(merged.warnings);
    match merged.topics {
        Ok(map) => run.merged = map,
        Err(e) => run.status = failure(Stage::Merged, None, &e),
    }
    run
}

/// Runs every question and assembles the run record. A failing question is
/// marked failed; the others still complete.
pub fn run_pipeline(
    client: &dyn LlmClient,
    survey_id: SurveyId,
    responses: &[SurveyResponse],
    questions: &[QuestionSpec],
    config: &EngineConfig,
) -> RunRecord {
    let started_at = Utc::now();
    let run_id = uuid::Uuid::now_v7().to_string();
    let runs = bounded_map(questions, config.question_parallelism, |q| {
        log::info!("run {run_id}: question {}", q.question_id);
        run_question(client, config, q, responses)
    });
    let complete = runs.iter().all(QuestionRun::is_completed);
    RunRecord {
        schema: RUN_SCHEMA.into(),
        run_id,
        started_at,
        finished_at: Utc::now(),
        survey_id,
        model_id: config.model_id.clone(),
        seed: config.seed,
        temperature: config.temperature,
        batch_size: config.batch_size,
        retry_limit: config.retry_limit,
        prompt_fingerprints: prompts::fingerprints(),
        questions: runs,
        complete,
    }
}
