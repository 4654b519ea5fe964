//! PageRank over a small dependency graph built from requirement strings.
//!
//! cargo run --example pagerank

use chrono::DateTime;
use linkstudy::harvest::graph::{build_dependency_graph, pagerank, ranking, PageRankParams};
use linkstudy::harvest::{PackageRecord, RecordState};

fn package(name: &str, deps: &[&str]) -> PackageRecord {
    PackageRecord {
        name: name.into(),
        state: RecordState::Ok,
        emails: vec![],
        declared_urls: Default::default(),
        dependencies: deps.iter().map(|d| d.to_string()).collect(),
        warnings: vec![],
        raw_fetched_at: DateTime::UNIX_EPOCH,
    }
}

fn main() -> anyhow::Result<()> {
    let records = [
        package("requests", &["urllib3 (<3,>=1.21.1)", "idna<4,>=2.5", "certifi>=2017.4.17", "charset_normalizer<4,>=2"]),
        package("httpx", &["certifi", "idna", "httpcore==1.*", "anyio"]),
        package("pip-audit", &["requests>=2.31", "rich; extra == 'cli'"]),
        package("twine", &["requests>=2.20", "urllib3>=1.26.0", "rich>=12.0.0"]),
        package("urllib3", &[]),
        package("certifi", &[]),
    ];
    let graph = build_dependency_graph(&records);
    println!(
        "{} nodes ({} without a record), {} edges",
        graph.nodes.len(),
        graph.stubs.len(),
        graph.edges.len()
    );
    let outcome = pagerank(&graph, PageRankParams::default())?;
    println!("converged={} after {} iterations\n", outcome.converged, outcome.iterations);
    for (name, score) in ranking(&outcome.scores) {
        let stub = if graph.stubs.contains(name) { " (stub)" } else { "" };
        println!("{score:.4}  {name}{stub}");
    }
    Ok(())
}
