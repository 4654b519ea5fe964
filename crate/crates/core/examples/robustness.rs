//! Compare topic sets across repeated runs.
//!
//! cargo run --example robustness

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use linkstudy::responses::{ingest_csv, ColumnMap, Denylist, SurveyId};
use linkstudy::robustness::{jaccard, render_text, robustness_report, semantic_similarity, HashingEmbedder, OneHotEmbedder};
use linkstudy::topics::mock::KeywordLlm;
use linkstudy::topics::{run_pipeline, EngineConfig, QuestionSpec};

fn set(labels: &[&str]) -> BTreeSet<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

fn main() -> anyhow::Result<()> {
    let a = set(&["a", "b", "c"]);
    let b = set(&["a", "b", "d"]);
    println!("jaccard {{a,b,c}} vs {{a,b,d}}: {:.3}", jaccard(&a, &b));
    println!(
        "cosine with orthogonal embeddings: {:.3}\n",
        semantic_similarity(&a, &b, &OneHotEmbedder::new(8))?
    );

    let text = "What would make you add or update the repository link?";
    let csv = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/survey/repository_url.csv");
    let map = ColumnMap {
        survey_id: SurveyId::RepositoryUrl,
        columns: BTreeMap::from([("SQ-1.2".to_owned(), text.to_owned())]),
    };
    let (responses, _) = ingest_csv(&csv, &map, &Denylist::default())?;
    let question = [QuestionSpec { question_id: "SQ-1.2".into(), text: text.into() }];

    // A smaller topic budget in the last run stands in for model drift.
    let runs: Vec<_> = [3, 3, 2]
        .into_iter()
        .map(|max_topics| {
            let llm = KeywordLlm { max_topics };
            run_pipeline(&llm, SurveyId::RepositoryUrl, &responses, &question, &EngineConfig::default())
        })
        .collect();
    let report = robustness_report(&runs, SurveyId::RepositoryUrl, &HashingEmbedder::default())?;
    print!("{}", render_text(&report));
    Ok(())
}
