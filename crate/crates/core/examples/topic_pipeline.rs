//! Extract and merge topics for the bundled survey answers.
//!
//! Uses the offline keyword model unless `LINKSTUDY_LLM_URL` points at an
//! Ollama-compatible server, e.g. `http://localhost:11434`.
//!
//! cargo run --example topic_pipeline

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use linkstudy::responses::{ingest_csv, ColumnMap, Denylist, SurveyId};
use linkstudy::topics::mock::KeywordLlm;
use linkstudy::topics::{run_pipeline, EngineConfig, LlmClient, OllamaClient, QuestionSpec};

fn main() -> anyhow::Result<()> {
    let text = "Why does the package metadata not link to the source repository?";
    let csv = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/survey/repository_url.csv");
    let map = ColumnMap {
        survey_id: SurveyId::RepositoryUrl,
        columns: BTreeMap::from([("SQ-1.1".to_owned(), text.to_owned())]),
    };
    let (responses, _) = ingest_csv(&csv, &map, &Denylist::default())?;

    let client: Box<dyn LlmClient> = match std::env::var("LINKSTUDY_LLM_URL") {
        Ok(url) => Box::new(OllamaClient::new(&url, Duration::from_secs(600))?),
        Err(_) => Box::new(KeywordLlm::default()),
    };
    let config = EngineConfig { batch_size: 5, ..EngineConfig::default() };
    let question = QuestionSpec { question_id: "SQ-1.1".into(), text: text.into() };
    let run = run_pipeline(client.as_ref(), SurveyId::RepositoryUrl, &responses, &[question], &config);

    let q = &run.questions[0];
    println!("run {} ({} documents in {} batches): {:?}\n", run.run_id, q.documents, q.batches, q.status);
    if let Some(second) = q.exchanges.get(1) {
        println!("second batch prompt:\n{}\n", second.user_prompt);
    }
    println!("raw topics: {}", q.raw.topics.len());
    for (label, keywords) in &q.merged.topics {
        println!("  {label:<40} {}", keywords.join(", "));
    }
    Ok(())
}
