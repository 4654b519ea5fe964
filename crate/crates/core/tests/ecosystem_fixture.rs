//! The bundled registry recording, replayed end to end through the library.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use linkstudy::harvest::{
    self, audit_liveness, build_dependency_graph, ecosystem_report, pagerank, sample_participants,
    AuditPolicy, EcosystemReport, HarvestPolicy, LinkStatus, PageRankParams, Platform, RecordState,
};
use linkstudy::transport::ReplayTransport;
use proptest::prelude::*;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/registry")
}

fn replay_report() -> (harvest::Snapshot, EcosystemReport) {
    let transport = ReplayTransport::from_dir(fixture_dir()).unwrap();
    let snapshot = harvest::harvest(&transport, "https://pypi.org", &HarvestPolicy::default()).unwrap();
    let (audited, _) = audit_liveness(&transport, &snapshot.links, &AuditPolicy::default());
    let graph = build_dependency_graph(&snapshot.packages);
    let scores = pagerank(&graph, PageRankParams::default()).unwrap().scores;
    let report = ecosystem_report(&snapshot.packages, &audited, &scores, &[10.0, 50.0, 100.0]);
    (harvest::Snapshot { links: audited, ..snapshot }, report)
}

#[test]
fn headline_ratios() {
    let started = Instant::now();
    let (_, r) = replay_report();
    assert!(started.elapsed().as_secs_f64() < 5.0);

    // six of ten packages declare a repository
    assert_eq!(r.total_packages, 10);
    assert!((r.share_with_repo_link.unwrap() - 0.6).abs() < 1e-12);
    // one of four GitHub repository links is gone, after following a rename
    assert_eq!((r.counts.github_repo_links_checked, r.counts.github_repo_links_not_found), (4, 1));
    assert!((r.outdated_repo_share.unwrap() - 0.25).abs() < 1e-12);
    // one donation link is on the registry page, two only in FUNDING.yml
    let split = r.donation_location_split.unwrap();
    assert!((split.registry - 1.0 / 3.0).abs() < 1e-12);
    assert!((split.funding_yml_only - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn platform_breakdown() {
    let (_, r) = replay_report();
    let expected = BTreeMap::from([
        (Platform::Github, 4.0 / 6.0),
        (Platform::Gitlab, 1.0 / 6.0),
        (Platform::Bitbucket, 1.0 / 6.0),
    ]);
    assert_eq!(r.platform_distribution.len(), expected.len());
    for (p, v) in expected {
        assert!((r.platform_distribution[&p] - v).abs() < 1e-12, "{p:?}");
    }
    let top_all = r.top_percentile_shares.last().unwrap();
    assert_eq!(top_all.packages, 10);
    assert_eq!(top_all.share_with_repo_link, r.share_with_repo_link);
}

#[test]
fn link_states() {
    let (snapshot, _) = replay_report();
    let status = |url: &str| {
        snapshot
            .links
            .iter()
            .find(|l| l.url == url)
            .map(|l| (l.status, l.http_status))
            .unwrap_or_else(|| panic!("{url} missing"))
    };
    assert_eq!(status("https://github.com/gamma-labs/gamma"), (LinkStatus::NotFound, Some(404)));
    assert_eq!(status("https://iota.example.org/manual/"), (LinkStatus::Unreachable, Some(503)));
    assert!(snapshot.packages.iter().all(|p| p.state == RecordState::Ok));
    assert!(snapshot.packages.iter().any(|p| p.name == "kappa"), "index names are normalized");
}

#[test]
fn snapshots_round_trip_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let write = |tag: &str| {
        let (snapshot, _) = replay_report();
        let p = dir.path().join(format!("packages-{tag}.jsonl"));
        let l = dir.path().join(format!("links-{tag}.jsonl"));
        harvest::write_packages(&p, &snapshot.packages).unwrap();
        harvest::write_links(&l, &snapshot.links).unwrap();
        assert_eq!(harvest::read_packages(&p).unwrap(), snapshot.packages);
        assert_eq!(harvest::read_links(&l).unwrap(), snapshot.links);
        (std::fs::read(p).unwrap(), std::fs::read(l).unwrap())
    };
    assert_eq!(write("a"), write("b"));
}

#[test]
fn sampling_is_seeded() {
    let (snapshot, _) = replay_report();
    let a = sample_participants(&snapshot.packages, 4, 7).unwrap();
    assert_eq!(a, sample_participants(&snapshot.packages, 4, 7).unwrap());
    assert_ne!(a, sample_participants(&snapshot.packages, 4, 8).unwrap());
    assert!(sample_participants(&snapshot.packages, 1000, 7).is_err());
}

proptest! {
    #[test]
    fn sample_is_a_duplicate_free_subset(n in 0usize..=10, seed: u64) {
        let (snapshot, _) = replay_report();
        let population = harvest::sample::unique_emails(&snapshot.packages);
        let n = n.min(population.len());
        let picked = sample_participants(&snapshot.packages, n, seed).unwrap();
        prop_assert_eq!(picked.len(), n);
        let distinct: std::collections::BTreeSet<_> = picked.iter().collect();
        prop_assert_eq!(distinct.len(), n);
        prop_assert!(picked.iter().all(|e| population.contains(e)));
    }
}
