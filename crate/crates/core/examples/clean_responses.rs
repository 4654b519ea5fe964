//! Ingest a survey CSV, replace "not applicable" style answers with the
//! placeholder and print per-question statistics.
//!
//! cargo run --example clean_responses

use std::collections::BTreeMap;
use std::path::PathBuf;

use linkstudy::responses::{clean_response, ingest_csv, question_stats, render_stats, ColumnMap, Denylist, SurveyId};

fn main() -> anyhow::Result<()> {
    let denylist = Denylist::default();
    for raw in ["N/a", " * n.a. ", "-", "I want to share my code"] {
        let (cleaned, placeholder) = clean_response(raw, &denylist);
        println!("{raw:?} -> {cleaned:?} (placeholder: {placeholder})");
    }

    let csv = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/survey/repository_url.csv");
    let columns = BTreeMap::from([
        ("SQ-1.1".to_owned(), "Why does the package metadata not link to the source repository?".to_owned()),
        ("SQ-1.2".to_owned(), "What would make you add or update the repository link?".to_owned()),
    ]);
    let map = ColumnMap { survey_id: SurveyId::RepositoryUrl, columns };
    let (responses, stats) = ingest_csv(&csv, &map, &denylist)?;
    println!("\n{stats:?}\n");
    print!("{}", render_stats(&question_stats(&responses)));
    Ok(())
}
