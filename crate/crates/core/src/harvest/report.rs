//! Aggregate ecosystem statistics over one snapshot.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::classify::{LinkCategory, Platform};
use super::graph::ranking;
use super::links::{LinkAudit, LinkSource, LinkStatus};
use super::registry::PackageRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileShare {
    pub percentile: f64,
    pub packages: usize,
    pub share_with_repo_link: Option<f64>,
    pub share_with_donation_link: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DonationSplit {
    /// Donation links that appear on the registry page.
    pub registry: f64,
    /// Donation links that only appear in a repository's FUNDING.yml.
    pub funding_yml_only: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub skipped_packages: usize,
    pub packages_with_repo_link: usize,
    pub packages_with_donation_link: usize,
    pub repository_links: usize,
    pub github_repo_links_checked: usize,
    pub github_repo_links_not_found: usize,
    pub sponsors_links_checked: usize,
    pub sponsors_links_not_found: usize,
    pub donation_links: usize,
}

/// Ratios are `None` when their denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcosystemReport {
    pub total_packages: usize,
    pub share_with_repo_link: Option<f64>,
    pub share_with_donation_link: Option<f64>,
    pub top_percentile_shares: Vec<PercentileShare>,
    pub outdated_repo_share: Option<f64>,
    pub outdated_sponsors_share: Option<f64>,
    pub platform_distribution: BTreeMap<Platform, f64>,
    pub donation_location_split: Option<DonationSplit>,
    pub counts: ReportCounts,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn ecosystem_report(
    records: &[PackageRecord],
    audits: &[LinkAudit],
    pagerank: &BTreeMap<String, f64>,
    percentiles: &[f64],
) -> EcosystemReport {
    let packages: BTreeSet<&str> = records
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| r.name.as_str())
        .collect();
    let total = packages.len();
    let links: Vec<&LinkAudit> = audits
        .iter()
        .filter(|l| packages.contains(l.package.as_str()))
        .collect();

    let with_repo: BTreeSet<&str> = links
        .iter()
        .filter(|l| l.category == LinkCategory::Repository)
        .map(|l| l.package.as_str())
        .collect();
    let with_donation: BTreeSet<&str> = links
        .iter()
        .filter(|l| l.category == LinkCategory::Donation)
        .map(|l| l.package.as_str())
        .collect();

    // Rank only packages that belong to the snapshot; stub nodes are excluded.
    let ranked_scores: BTreeMap<String, f64> = packages
        .iter()
        .map(|p| (p.to_string(), pagerank.get(*p).copied().unwrap_or(0.0)))
        .collect();
    let ranked: Vec<&str> = ranking(&ranked_scores).into_iter().map(|(n, _)| n).collect();
    let top_percentile_shares = percentiles
        .iter()
        .map(|&p| {
            let take = if total == 0 {
                0
            } else {
                ((total as f64 * p / 100.0).ceil() as usize).clamp(1, total)
            };
            let top = &ranked[..take];
            PercentileShare {
                percentile: p,
                packages: take,
                share_with_repo_link: ratio(top.iter().filter(|n| with_repo.contains(*n)).count(), take),
                share_with_donation_link: ratio(
                    top.iter().filter(|n| with_donation.contains(*n)).count(),
                    take,
                ),
            }
        })
        .collect();

    let repo_links: BTreeSet<(&str, &str, Platform)> = links
        .iter()
        .filter(|l| l.category == LinkCategory::Repository)
        .map(|l| (l.package.as_str(), l.url.as_str(), l.platform))
        .collect();
    let mut platform_counts: BTreeMap<Platform, usize> = BTreeMap::new();
    for (_, _, platform) in &repo_links {
        *platform_counts.entry(*platform).or_default() += 1;
    }
    let platform_distribution = platform_counts
        .into_iter()
        .map(|(p, c)| (p, c as f64 / repo_links.len() as f64))
        .collect();

    let checked = |l: &&&LinkAudit| l.status != LinkStatus::Unchecked;
    let github_checked: Vec<_> = links
        .iter()
        .filter(|l| l.category == LinkCategory::Repository && l.platform == Platform::Github)
        .filter(checked)
        .collect();
    let github_missing = github_checked.iter().filter(|l| l.status == LinkStatus::NotFound).count();
    let sponsors_checked: Vec<_> = links
        .iter()
        .filter(|l| l.platform == Platform::GithubSponsors)
        .filter(checked)
        .collect();
    let sponsors_missing = sponsors_checked.iter().filter(|l| l.status == LinkStatus::NotFound).count();

    // A donation URL counts once per package; it is "registry" if any
    // occurrence comes from the project links.
    let mut donation_sources: BTreeMap<(&str, &str), bool> = BTreeMap::new();
    for l in links.iter().filter(|l| l.category == LinkCategory::Donation) {
        let on_registry = donation_sources.entry((l.package.as_str(), l.url.as_str())).or_insert(false);
        *on_registry |= l.source == LinkSource::ProjectLinks;
    }
    let donation_links = donation_sources.len();
    let registry_links = donation_sources.values().filter(|v| **v).count();
    let donation_location_split = (donation_links > 0).then(|| DonationSplit {
        registry: registry_links as f64 / donation_links as f64,
        funding_yml_only: (donation_links - registry_links) as f64 / donation_links as f64,
    });

    EcosystemReport {
        total_packages: total,
        share_with_repo_link: ratio(with_repo.len(), total),
        share_with_donation_link: ratio(with_donation.len(), total),
        top_percentile_shares,
        outdated_repo_share: ratio(github_missing, github_checked.len()),
        outdated_sponsors_share: ratio(sponsors_missing, sponsors_checked.len()),
        platform_distribution,
        donation_location_split,
        counts: ReportCounts {
            skipped_packages: records.len() - total,
            packages_with_repo_link: with_repo.len(),
            packages_with_donation_link: with_donation.len(),
            repository_links: repo_links.len(),
            github_repo_links_checked: github_checked.len(),
            github_repo_links_not_found: github_missing,
            sponsors_links_checked: sponsors_checked.len(),
            sponsors_links_not_found: sponsors_missing,
            donation_links,
        },
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |v| format!("{:.1}%", v * 100.0))
}

pub fn render_text(report: &EcosystemReport) -> String {
    let mut s = String::new();
    let c = &report.counts;
    let _ = writeln!(s, "Packages analysed:            {} ({} skipped)", report.total_packages, c.skipped_packages);
    let _ = writeln!(s, "With repository link:         {}", pct(report.share_with_repo_link));
    let _ = writeln!(s, "With donation link:           {}", pct(report.share_with_donation_link));
    for share in &report.top_percentile_shares {
        let _ = writeln!(
            s,
            "Top {}% by PageRank ({} pkgs): repository {}, donation {}",
            share.percentile,
            share.packages,
            pct(share.share_with_repo_link),
            pct(share.share_with_donation_link)
        );
    }
    let _ = writeln!(
        s,
        "Outdated GitHub repo links:   {} ({}/{})",
        pct(report.outdated_repo_share),
        c.github_repo_links_not_found,
        c.github_repo_links_checked
    );
    let _ = writeln!(
        s,
        "Outdated Sponsors links:      {} ({}/{})",
        pct(report.outdated_sponsors_share),
        c.sponsors_links_not_found,
        c.sponsors_links_checked
    );
    let _ = writeln!(s, "Repository platforms ({} links):", c.repository_links);
    for (platform, share) in &report.platform_distribution {
        let _ = writeln!(s, "  {:<12} {}", platform.as_str(), pct(Some(*share)));
    }
    match &report.donation_location_split {
        Some(split) => {
            let _ = writeln!(
                s,
                "Donation links ({}): registry {}, FUNDING.yml only {}",
                c.donation_links,
                pct(Some(split.registry)),
                pct(Some(split.funding_yml_only))
            );
        }
        None => {
            let _ = writeln!(s, "Donation links: none");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harvest::registry::RecordState;
    use chrono::{DateTime, Utc};

    fn record(name: &str) -> PackageRecord {
        PackageRecord {
            name: name.into(),
            state: RecordState::Ok,
            emails: vec![],
            declared_urls: Default::default(),
            dependencies: vec![],
            warnings: vec![],
            raw_fetched_at: DateTime::<Utc>::UNIX_EPOCH,
        }
    }

    fn link(pkg: &str, url: &str, cat: LinkCategory, p: Platform, src: LinkSource, st: LinkStatus) -> LinkAudit {
        LinkAudit {
            package: pkg.into(),
            url: url.into(),
            category: cat,
            platform: p,
            source: src,
            status: st,
            checked_at: None,
            http_status: None,
        }
    }

    #[test]
    fn empty_snapshot_reports_absent_ratios() {
        let r = ecosystem_report(&[], &[], &BTreeMap::new(), &[1.0]);
        assert_eq!(r.total_packages, 0);
        assert_eq!(r.share_with_repo_link, None);
        assert_eq!(r.outdated_repo_share, None);
        assert_eq!(r.donation_location_split, None);
        assert_eq!(r.top_percentile_shares[0].packages, 0);
        assert_eq!(r.top_percentile_shares[0].share_with_repo_link, None);
    }

    #[test]
    fn six_of_ten_repo_linked() {
        let records: Vec<_> = (0..10).map(|i| record(&format!("p{i}"))).collect();
        let links: Vec<_> = (0..6)
            .map(|i| {
                link(
                    &format!("p{i}"),
                    &format!("https://gitlab.com/o/p{i}"),
                    LinkCategory::Repository,
                    Platform::Gitlab,
                    LinkSource::ProjectLinks,
                    LinkStatus::Unchecked,
                )
            })
            .collect();
        let r = ecosystem_report(&records, &links, &BTreeMap::new(), &[1.0]);
        assert_eq!(r.share_with_repo_link, Some(0.6));
        assert_eq!(r.outdated_repo_share, None);
        assert_eq!(r.platform_distribution[&Platform::Gitlab], 1.0);
    }

    #[test]
    fn one_of_four_github_links_missing() {
        let records: Vec<_> = (0..4).map(|i| record(&format!("p{i}"))).collect();
        let links: Vec<_> = (0..4)
            .map(|i| {
                link(
                    &format!("p{i}"),
                    &format!("https://github.com/o/p{i}"),
                    LinkCategory::Repository,
                    Platform::Github,
                    LinkSource::ProjectLinks,
                    if i == 0 { LinkStatus::NotFound } else { LinkStatus::Reachable },
                )
            })
            .collect();
        let r = ecosystem_report(&records, &links, &BTreeMap::new(), &[]);
        assert_eq!(r.outdated_repo_share, Some(0.25));
    }

    #[test]
    fn donation_split_counts_registry_occurrences() {
        let records = vec![record("a"), record("b")];
        let d = LinkCategory::Donation;
        let links = vec![
            link("a", "https://github.com/sponsors/x", d, Platform::GithubSponsors, LinkSource::ProjectLinks, LinkStatus::Unchecked),
            // same URL also in FUNDING.yml: still a registry link
            link("a", "https://github.com/sponsors/x", d, Platform::GithubSponsors, LinkSource::FundingYml, LinkStatus::Unchecked),
            link("a", "https://ko-fi.com/x", d, Platform::KoFi, LinkSource::FundingYml, LinkStatus::Unchecked),
            link("b", "https://github.com/sponsors/y", d, Platform::GithubSponsors, LinkSource::FundingYml, LinkStatus::Unchecked),
        ];
        let r = ecosystem_report(&records, &links, &BTreeMap::new(), &[]);
        let split = r.donation_location_split.unwrap();
        assert_eq!(split.registry, 1.0 / 3.0);
        assert_eq!(split.funding_yml_only, 2.0 / 3.0);
        assert_eq!(r.share_with_donation_link, Some(1.0));
    }

    #[test]
    fn top_percentile_uses_pagerank_order() {
        let records: Vec<_> = (0..200).map(|i| record(&format!("p{i:03}"))).collect();
        let mut scores = BTreeMap::new();
        for i in 0..200 {
            scores.insert(format!("p{i:03}"), i as f64);
        }
        let links = vec![link(
            "p199",
            "https://github.com/o/r",
            LinkCategory::Repository,
            Platform::Github,
            LinkSource::ProjectLinks,
            LinkStatus::Unchecked,
        )];
        let r = ecosystem_report(&records, &links, &scores, &[1.0, 50.0]);
        assert_eq!(r.top_percentile_shares[0].packages, 2);
        assert_eq!(r.top_percentile_shares[0].share_with_repo_link, Some(0.5));
        assert_eq!(r.top_percentile_shares[1].packages, 100);
        assert_eq!(r.top_percentile_shares[1].share_with_repo_link, Some(0.01));
    }

    #[test]
    fn platform_distribution_sums_to_one() {
        let records: Vec<_> = (0..5).map(|i| record(&format!("p{i}"))).collect();
        let platforms = [Platform::Github, Platform::Github, Platform::Gitlab, Platform::Codeberg, Platform::Sourcehut];
        let links: Vec<_> = platforms
            .iter()
            .enumerate()
            .map(|(i, p)| link(&format!("p{i}"), &format!("https://x/{i}"), LinkCategory::Repository, *p, LinkSource::ProjectLinks, LinkStatus::Unchecked))
            .collect();
        let r = ecosystem_report(&records, &links, &BTreeMap::new(), &[]);
        let sum: f64 = r.platform_distribution.values().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(render_text(&r).contains("github"));
    }
}
