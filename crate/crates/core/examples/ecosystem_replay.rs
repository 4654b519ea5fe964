//! Harvest, audit and summarize the bundled registry recording without
//! touching the network.
//!
//! cargo run --example ecosystem_replay [FIXTURE_DIR]

use std::collections::BTreeMap;
use std::path::PathBuf;

use linkstudy::harvest::{
    self, audit_liveness, build_dependency_graph, ecosystem_report, pagerank, report, sample_participants,
    AuditPolicy, HarvestPolicy, PageRankParams,
};
use linkstudy::transport::ReplayTransport;

fn main() -> anyhow::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/registry"));
    let transport = ReplayTransport::from_dir(&dir)?;

    let snapshot = harvest::harvest(&transport, "https://pypi.org", &HarvestPolicy::default())?;
    println!("{} packages, {} links", snapshot.packages.len(), snapshot.links.len());

    let (audited, stats) = audit_liveness(&transport, &snapshot.links, &AuditPolicy::default());
    println!("liveness: {stats:?}");
    for link in audited.iter().filter(|l| l.http_status != Some(200)) {
        println!("  {:?} {:?} {}", link.status, link.http_status, link.url);
    }

    let graph = build_dependency_graph(&snapshot.packages);
    let scores: BTreeMap<String, f64> = pagerank(&graph, PageRankParams::default())?.scores;
    let rep = ecosystem_report(&snapshot.packages, &audited, &scores, &[10.0]);
    println!("\n{}", report::render_text(&rep));

    let sample = sample_participants(&snapshot.packages, 3, 42)?;
    println!("seeded participant sample: {sample:?}");
    Ok(())
}
