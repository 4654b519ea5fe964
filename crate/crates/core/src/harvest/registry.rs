//! Registry endpoints: the simple index and the per-package JSON document.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::HarvestError;
use crate::transport::{fetch_with_retry, RetryPolicy, Transport, TransportError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordState {
    Ok,
    /// The metadata endpoint answered 404.
    Absent,
    /// The metadata document was not valid JSON of the expected shape.
    Malformed,
    /// Network failure after retries.
    FetchFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageRecord {
    pub name: String,
    pub state: RecordState,
    pub emails: Vec<String>,
    pub declared_urls: BTreeMap<String, String>,
    pub dependencies: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub raw_fetched_at: DateTime<Utc>,
}

impl PackageRecord {
    pub fn is_ok(&self) -> bool {
        self.state == RecordState::Ok
    }

    fn flagged(name: &str, state: RecordState, at: DateTime<Utc>, warning: String) -> Self {
        Self {
            name: name.to_owned(),
            state,
            emails: Vec::new(),
            declared_urls: BTreeMap::new(),
            dependencies: Vec::new(),
            warnings: vec![warning],
            raw_fetched_at: at,
        }
    }
}

/// Registry name normalization: lowercase, runs of `-`, `_`, `.` become `-`.
pub fn normalize_name(name: &str) -> String {
    static SEP: OnceLock<Regex> = OnceLock::new();
    let sep = SEP.get_or_init(|| Regex::new(r"[-_.]+").expect("valid regex"));
    sep.replace_all(name.trim(), "-").to_lowercase()
}

pub fn index_url(registry_base: &str) -> String {
    format!("{}/simple/", registry_base.trim_end_matches('/'))
}

pub fn metadata_url(registry_base: &str, name: &str) -> String {
    format!("{}/pypi/{}/json", registry_base.trim_end_matches('/'), name)
}

/// Parses a simple-index page in either the HTML or the JSON flavour and
/// returns sorted, deduplicated, normalized names.
pub fn parse_index(body: &str) -> Result<Vec<String>, HarvestError> {
    static ANCHOR: OnceLock<Regex> = OnceLock::new();
    let trimmed = body.trim_start();
    let mut names = BTreeSet::new();
    if trimmed.starts_with('{') {
        #[derive(Deserialize)]
        struct Project {
            name: String,
        }
        #[derive(Deserialize)]
        struct JsonIndex {
            projects: Vec<Project>,
        }
        let parsed: JsonIndex =
            serde_json::from_str(trimmed).map_err(|e| HarvestError::IndexParse {
                diagnostics: format!("JSON index at line {} column {}: {e}", e.line(), e.column()),
            })?;
        names.extend(parsed.projects.into_iter().map(|p| normalize_name(&p.name)));
    } else if trimmed.is_empty() {
        // an empty page lists nothing
    } else if trimmed.starts_with('<') {
        let anchor = ANCHOR.get_or_init(|| {
            Regex::new(r"(?is)<a\b[^>]*>\s*([^<]*?)\s*</a\s*>").expect("valid regex")
        });
        names.extend(
            anchor
                .captures_iter(trimmed)
                .map(|c| normalize_name(&c[1]))
                .filter(|n| !n.is_empty()),
        );
    } else {
        let preview: String = trimmed.chars().take(60).collect();
        return Err(HarvestError::IndexParse {
            diagnostics: format!("neither HTML nor JSON; body starts with {preview:?}"),
        });
    }
    Ok(names.into_iter().collect())
}

pub fn fetch_package_index<T: Transport + ?Sized>(
    transport: &T,
    registry_base: &str,
    retry: RetryPolicy,
    max_redirects: usize,
) -> Result<Vec<String>, HarvestError> {
    let url = index_url(registry_base);
    let resp = fetch_with_retry(transport, &url, max_redirects, retry)?;
    if resp.status != 200 {
        return Err(HarvestError::Transport(TransportError::Network {
            url,
            message: format!("index answered HTTP {}", resp.status),
        }));
    }
    let names = parse_index(&resp.body)?;
    log::info!("index lists {} packages", names.len());
    Ok(names)
}

/// Email addresses found in the author and maintainer fields, deduplicated
/// case-insensitively in order of first appearance.
pub fn extract_emails<'a>(fields: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    static EMAIL: OnceLock<Regex> = OnceLock::new();
    let email = EMAIL.get_or_init(|| {
        Regex::new(r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)+").expect("valid regex")
    });
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for field in fields {
        for m in email.find_iter(field) {
            let addr = m.as_str().trim_end_matches('.');
            if seen.insert(addr.to_lowercase()) {
                out.push(addr.to_owned());
            }
        }
    }
    out
}

#[derive(Debug, Deserialize)]
struct MetadataDocument {
    info: MetadataInfo,
}

#[derive(Debug, Default, Deserialize)]
struct MetadataInfo {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    author_email: Option<String>,
    #[serde(default)]
    maintainer_email: Option<String>,
    #[serde(default)]
    home_page: Option<String>,
    #[serde(default)]
    project_urls: Option<BTreeMap<String, Option<String>>>,
    #[serde(default)]
    requires_dist: Option<Vec<String>>,
}

/// Builds a record from a metadata document. Missing fields give empty
/// collections; only an unparsable document yields a malformed record.
pub fn parse_metadata(name: &str, body: &str, fetched_at: DateTime<Utc>) -> PackageRecord {
    let doc: MetadataDocument = match serde_json::from_str(body) {
        Ok(doc) => doc,
        Err(e) => {
            return PackageRecord::flagged(
                name,
                RecordState::Malformed,
                fetched_at,
                format!("metadata JSON: {e}"),
            )
        }
    };
    let info = doc.info;
    let mut warnings = Vec::new();
    if let Some(declared) = info.name.as_deref() {
        if normalize_name(declared) != name {
            warnings.push(format!("metadata declares name {declared:?}"));
        }
    }

    let emails = extract_emails(
        [info.author_email.as_deref(), info.maintainer_email.as_deref()]
            .into_iter()
            .flatten(),
    );

    let mut declared_urls = BTreeMap::new();
    for (label, url) in info.project_urls.unwrap_or_default() {
        let Some(url) = url.map(|u| u.trim().to_owned()).filter(|u| !u.is_empty()) else {
            continue;
        };
        if url::Url::parse(&url).is_err() {
            warnings.push(format!("project link {label:?} is not an absolute URL: {url:?}"));
        }
        declared_urls.insert(label, url);
    }
    if let Some(home) = info
        .home_page
        .map(|u| u.trim().to_owned())
        .filter(|u| !u.is_empty() && u != "UNKNOWN")
    {
        if !declared_urls.values().any(|u| u == &home) {
            if url::Url::parse(&home).is_err() {
                warnings.push(format!("home page is not an absolute URL: {home:?}"));
            }
            let label = if declared_urls.contains_key("Homepage") {
                "home_page"
            } else {
                "Homepage"
            };
            declared_urls.insert(label.to_owned(), home);
        }
    }

    PackageRecord {
        name: name.to_owned(),
        state: RecordState::Ok,
        emails,
        declared_urls,
        dependencies: info.requires_dist.unwrap_or_default(),
        warnings,
        raw_fetched_at: fetched_at,
    }
}

pub fn fetch_package_metadata<T: Transport + ?Sized>(
    transport: &T,
    registry_base: &str,
    name: &str,
    retry: RetryPolicy,
    max_redirects: usize,
) -> PackageRecord {
    let url = metadata_url(registry_base, name);
    match fetch_with_retry(transport, &url, max_redirects, retry) {
        Ok(resp) if resp.status == 404 => PackageRecord::flagged(
            name,
            RecordState::Absent,
            resp.fetched_at,
            "metadata endpoint answered 404".into(),
        ),
        Ok(resp) if resp.status != 200 => PackageRecord::flagged(
            name,
            RecordState::FetchFailed,
            resp.fetched_at,
            format!("metadata endpoint answered HTTP {}", resp.status),
        ),
        Ok(resp) => parse_metadata(name, &resp.body, resp.fetched_at),
        Err(e) => PackageRecord::flagged(
            name,
            RecordState::FetchFailed,
            transport.now(),
            e.to_string(),
        ),
    }
}
