//! Declared links, FUNDING.yml expansion and liveness checks.

use std::collections::BTreeSet;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::classify::{classify_link, github_repo_slug, LinkCategory, Platform};
use super::registry::PackageRecord;
use crate::parallel::bounded_map;
use crate::transport::{fetch_with_retry, RetryPolicy, Transport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkSource {
    ProjectLinks,
    FundingYml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkStatus {
    Reachable,
    NotFound,
    Unreachable,
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkAudit {
    /// Package that declares the link (directly or through its repository).
    pub package: String,
    pub url: String,
    pub category: LinkCategory,
    pub platform: Platform,
    pub source: LinkSource,
    pub status: LinkStatus,
    #[serde(default)]
    pub checked_at: Option<DateTime<Utc>>,
    /// Final HTTP status after redirects, when a response was received.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub http_status: Option<u16>,
}

impl LinkAudit {
    pub fn unchecked(
        package: &str,
        url: &str,
        category: LinkCategory,
        platform: Platform,
        source: LinkSource,
    ) -> Self {
        Self {
            package: package.to_owned(),
            url: url.to_owned(),
            category,
            platform,
            source,
            status: LinkStatus::Unchecked,
            checked_at: None,
            http_status: None,
        }
    }
}

/// Classified audits for every syntactically valid declared URL of a record,
/// one per distinct URL.
pub fn declared_links(record: &PackageRecord) -> Vec<LinkAudit> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for url in record.declared_urls.values() {
        let Ok(parsed) = url::Url::parse(url.trim()) else {
            continue;
        };
        let url = parsed.as_str().to_owned();
        if !seen.insert(url.clone()) {
            continue;
        }
        let (category, platform) = classify_link(&parsed);
        out.push(LinkAudit::unchecked(
            &record.name,
            &url,
            category,
            platform,
            LinkSource::ProjectLinks,
        ));
    }
    out
}

/// URL templates for the manifest keys we recognize.
const FUNDING_KEYS: &[(&str, &str, Platform)] = &[
    ("github", "https://github.com/sponsors/{}", Platform::GithubSponsors),
    ("patreon", "https://www.patreon.com/{}", Platform::Patreon),
    ("open_collective", "https://opencollective.com/{}", Platform::OpenCollective),
    ("ko_fi", "https://ko-fi.com/{}", Platform::KoFi),
    ("tidelift", "https://tidelift.com/funding/github/{}", Platform::Tidelift),
    ("liberapay", "https://liberapay.com/{}", Platform::Liberapay),
    ("buy_me_a_coffee", "https://www.buymeacoffee.com/{}", Platform::BuyMeACoffee),
];

#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundingExpansion {
    pub links: Vec<(String, Platform)>,
    pub unknown_keys: Vec<String>,
}

fn yaml_strings(value: &serde_yaml::Value) -> Vec<String> {
    match value {
        serde_yaml::Value::String(s) => vec![s.trim().to_owned()],
        serde_yaml::Value::Sequence(items) => items.iter().flat_map(yaml_strings).collect(),
        serde_yaml::Value::Number(n) => vec![n.to_string()],
        _ => Vec::new(),
    }
    .into_iter()
    .filter(|s| !s.is_empty())
    .collect()
}

/// Expands a FUNDING.yml document into absolute donation URLs.
pub fn expand_funding_manifest(text: &str) -> Result<FundingExpansion, serde_yaml::Error> {
    let doc: serde_yaml::Value = serde_yaml::from_str(text)?;
    let mut out = FundingExpansion::default();
    let serde_yaml::Value::Mapping(map) = doc else {
        if doc.is_null() {
            return Ok(out);
        }
        return Err(serde::de::Error::custom("FUNDING.yml top level is not a mapping"));
    };
    for (key, value) in &map {
        let Some(key) = key.as_str() else { continue };
        if key == "custom" {
            for url in yaml_strings(value) {
                out.links.push((url, Platform::Custom));
            }
        } else if let Some((_, template, platform)) =
            FUNDING_KEYS.iter().find(|(k, _, _)| *k == key)
        {
            for ident in yaml_strings(value) {
                out.links.push((template.replace("{}", &ident), *platform));
            }
        } else {
            out.unknown_keys.push(key.to_owned());
        }
    }
    Ok(out)
}

pub fn funding_manifest_url(owner: &str, repo: &str, branch: &str) -> String {
    format!("https://raw.githubusercontent.com/{owner}/{repo}/{branch}/.github/FUNDING.yml")
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundingStats {
    pub manifests_found: usize,
    pub parse_failures: usize,
    pub unknown_keys: usize,
}

/// Retrieves `.github/FUNDING.yml` for a GitHub repository, trying each
/// branch in order until one does not answer 404.
pub fn fetch_funding_manifest<T: Transport + ?Sized>(
    transport: &T,
    package: &str,
    repo_url: &str,
    branches: &[String],
    retry: RetryPolicy,
    max_redirects: usize,
) -> (Vec<LinkAudit>, FundingStats) {
    let mut stats = FundingStats::default();
    let Some((owner, repo)) = github_repo_slug(repo_url) else {
        return (Vec::new(), stats);
    };
    for branch in branches {
        let url = funding_manifest_url(&owner, &repo, branch);
        let resp = match fetch_with_retry(transport, &url, max_redirects, retry) {
            Ok(resp) => resp,
            Err(e) => {
                log::warn!("FUNDING.yml for {owner}/{repo}: {e}");
                continue;
            }
        };
        if resp.status != 200 {
            continue;
        }
        stats.manifests_found += 1;
        match expand_funding_manifest(&resp.body) {
            Ok(expansion) => {
                for key in &expansion.unknown_keys {
                    log::warn!("FUNDING.yml for {owner}/{repo}: ignoring key {key:?}");
                }
                stats.unknown_keys += expansion.unknown_keys.len();
                let mut seen = BTreeSet::new();
                let audits = expansion
                    .links
                    .into_iter()
                    .filter_map(|(url, platform)| {
                        let parsed = url::Url::parse(&url).ok()?;
                        let url = parsed.as_str().to_owned();
                        seen.insert(url.clone()).then(|| {
                            LinkAudit::unchecked(
                                package,
                                &url,
                                LinkCategory::Donation,
                                platform,
                                LinkSource::FundingYml,
                            )
                        })
                    })
                    .collect();
                return (audits, stats);
            }
            Err(e) => {
                log::warn!("FUNDING.yml for {owner}/{repo} does not parse: {e}");
                stats.parse_failures += 1;
                return (Vec::new(), stats);
            }
        }
    }
    (Vec::new(), stats)
}

#[derive(Debug, Clone)]
pub struct AuditPolicy {
    pub concurrency: usize,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    pub max_redirects: usize,
}

impl Default for AuditPolicy {
    fn default() -> Self {
        Self {
            concurrency: 8,
            timeout: Duration::from_secs(20),
            retry: RetryPolicy::default(),
            max_redirects: 10,
        }
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditStats {
    pub reachable: usize,
    pub not_found: usize,
    pub unreachable: usize,
}

fn status_for(code: u16) -> LinkStatus {
    match code {
        404 => LinkStatus::NotFound,
        200..=399 => LinkStatus::Reachable,
        _ => LinkStatus::Unreachable,
    }
}

/// Sets `status`, `checked_at` and `http_status` on every link. Failures of
/// individual links are recorded on the link and counted, never propagated.
pub fn audit_liveness<T: Transport + ?Sized>(
    transport: &T,
    links: &[LinkAudit],
    policy: &AuditPolicy,
) -> (Vec<LinkAudit>, AuditStats) {
    let audited = bounded_map(links, policy.concurrency, |link| {
        let mut out = link.clone();
        match fetch_with_retry(transport, &link.url, policy.max_redirects, policy.retry) {
            Ok(resp) => {
                out.status = status_for(resp.status);
                out.http_status = Some(resp.status);
                out.checked_at = Some(resp.fetched_at);
            }
            Err(e) => {
                log::debug!("{}: {e}", link.url);
                out.status = LinkStatus::Unreachable;
                out.http_status = None;
                out.checked_at = Some(transport.now());
            }
        }
        out
    });
    let mut stats = AuditStats::default();
    for link in &audited {
        match link.status {
            LinkStatus::Reachable => stats.reachable += 1,
            LinkStatus::NotFound => stats.not_found += 1,
            LinkStatus::Unreachable => stats.unreachable += 1,
            LinkStatus::Unchecked => {}
        }
    }
    (audited, stats)
}
