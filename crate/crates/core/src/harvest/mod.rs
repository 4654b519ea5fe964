//! Registry harvesting: package metadata, link classification and liveness,
//! dependency ranking, participant sampling and ecosystem statistics.

pub mod classify;
pub mod graph;
pub mod links;
pub mod registry;
pub mod report;
pub mod sample;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use classify::{classify_link, classify_str, LinkCategory, Platform};
pub use graph::{build_dependency_graph, pagerank, DependencyGraph, PageRankOutcome, PageRankParams};
pub use links::{
    audit_liveness, declared_links, expand_funding_manifest, fetch_funding_manifest, AuditPolicy,
    AuditStats, LinkAudit, LinkSource, LinkStatus,
};
pub use registry::{fetch_package_index, fetch_package_metadata, PackageRecord, RecordState};
pub use report::{ecosystem_report, EcosystemReport};
pub use sample::{sample_participants, SampleError};

use crate::jsonl::{self, JsonlError};
use crate::parallel::bounded_map;
use crate::transport::{RetryPolicy, Transport, TransportError};

pub const PACKAGES_SCHEMA: &str = "linkstudy.packages/1";
pub const LINKS_SCHEMA: &str = "linkstudy.links/1";

#[derive(Debug, thiserror::Error)]
pub enum HarvestError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("malformed package index: {diagnostics}")]
    IndexParse { diagnostics: String },
    #[error(transparent)]
    Snapshot(#[from] JsonlError),
}

#[derive(Debug, Clone)]
pub struct HarvestPolicy {
    pub concurrency: usize,
    pub retry: RetryPolicy,
    pub max_redirects: usize,
    pub funding_branches: Vec<String>,
    pub fetch_funding: bool,
}

impl Default for HarvestPolicy {
    fn default() -> Self {
        Self {
            concurrency: 8,
            retry: RetryPolicy::default(),
            max_redirects: 10,
            funding_branches: vec!["main".into(), "master".into()],
            fetch_funding: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestStats {
    pub index_count: usize,
    pub ok: usize,
    pub absent: usize,
    pub malformed: usize,
    pub fetch_failed: usize,
    pub records_with_warnings: usize,
    pub funding_manifests_found: usize,
    pub funding_parse_failures: usize,
    pub funding_unknown_keys: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub packages: Vec<PackageRecord>,
    pub links: Vec<LinkAudit>,
    pub stats: HarvestStats,
}

/// Runs index, metadata and FUNDING.yml retrieval. Links come back
/// unchecked; liveness is a separate stage.
pub fn harvest<T: Transport + ?Sized>(
    transport: &T,
    registry_base: &str,
    policy: &HarvestPolicy,
) -> Result<Snapshot, HarvestError> {
    let names = fetch_package_index(transport, registry_base, policy.retry, policy.max_redirects)?;
    let packages: Vec<PackageRecord> = bounded_map(&names, policy.concurrency, |name| {
        fetch_package_metadata(transport, registry_base, name, policy.retry, policy.max_redirects)
    });

    let mut stats = HarvestStats {
        index_count: names.len(),
        ..HarvestStats::default()
    };
    for p in &packages {
        match p.state {
            RecordState::Ok => stats.ok += 1,
            RecordState::Absent => stats.absent += 1,
            RecordState::Malformed => stats.malformed += 1,
            RecordState::FetchFailed => stats.fetch_failed += 1,
        }
        if p.is_ok() && !p.warnings.is_empty() {
            stats.records_with_warnings += 1;
        }
    }

    let mut links: Vec<LinkAudit> = packages.iter().filter(|p| p.is_ok()).flat_map(declared_links).collect();

    if policy.fetch_funding {
        let mut repos: BTreeSet<(String, String)> = BTreeSet::new();
        for l in &links {
            if l.category == LinkCategory::Repository && l.platform == Platform::Github {
                if let Some((owner, repo)) = classify::github_repo_slug(&l.url) {
                    repos.insert((l.package.clone(), format!("https://github.com/{owner}/{repo}")));
                }
            }
        }
        let repos: Vec<_> = repos.into_iter().collect();
        let fetched = bounded_map(&repos, policy.concurrency, |(package, repo)| {
            fetch_funding_manifest(
                transport,
                package,
                repo,
                &policy.funding_branches,
                policy.retry,
                policy.max_redirects,
            )
        });
        let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
        for (audits, fstats) in fetched {
            stats.funding_manifests_found += fstats.manifests_found;
            stats.funding_parse_failures += fstats.parse_failures;
            stats.funding_unknown_keys += fstats.unknown_keys;
            for a in audits {
                if seen.insert((a.package.clone(), a.url.clone())) {
                    links.push(a);
                }
            }
        }
    }

    links.sort_by(|a, b| {
        (&a.package, a.source, &a.url).cmp(&(&b.package, b.source, &b.url))
    });
    log::info!(
        "harvested {} packages ({} ok), {} links",
        packages.len(),
        stats.ok,
        links.len()
    );
    Ok(Snapshot { packages, links, stats })
}

pub fn write_packages(path: &Path, packages: &[PackageRecord]) -> Result<(), JsonlError> {
    jsonl::write(path, PACKAGES_SCHEMA, packages)
}

pub fn read_packages(path: &Path) -> Result<Vec<PackageRecord>, JsonlError> {
    jsonl::read(path, PACKAGES_SCHEMA)
}

pub fn write_links(path: &Path, links: &[LinkAudit]) -> Result<(), JsonlError> {
    jsonl::write(path, LINKS_SCHEMA, links)
}

pub fn read_links(path: &Path) -> Result<Vec<LinkAudit>, JsonlError> {
    jsonl::read(path, LINKS_SCHEMA)
}
