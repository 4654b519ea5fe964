//! HTTP access for the harvester.
//!
//! Every registry, manifest and liveness request goes through a [`Transport`].
//! Three implementations exist: [`HttpTransport`] talks to the network,
//! [`ReplayTransport`] serves responses from a fixture directory, and
//! [`RecordingTransport`] wraps a live transport and writes each response into
//! a fixture directory so the run can be replayed offline later.
//!
//! A transport performs exactly one hop. Redirects are followed by
//! [`fetch_following`] so that the hop count and final status stay visible.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("request to {url} failed: {message}")]
    Network { url: String, message: String },
    #[error("request to {url} timed out")]
    Timeout { url: String },
    #[error("no recorded response for {url}")]
    NotRecorded { url: String },
    #[error("too many redirects starting at {url} (limit {limit})")]
    TooManyRedirects { url: String, limit: usize },
    #[error("invalid URL {url}: {message}")]
    InvalidUrl { url: String, message: String },
    #[error("fixture error in {path}: {message}")]
    Fixture { path: PathBuf, message: String },
}

/// One HTTP response, redirect not followed.
#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub url: String,
    pub status: u16,
    pub location: Option<String>,
    pub body: String,
    pub fetched_at: DateTime<Utc>,
}

impl HttpResponse {
    pub fn is_redirect(&self) -> bool {
        (300..400).contains(&self.status) && self.location.is_some()
    }
}

pub trait Transport: Send + Sync {
    /// Issue a single GET without following redirects.
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError>;

    /// Replay transports answer deterministically, so retry backoff is pointless.
    fn is_replay(&self) -> bool {
        false
    }

    /// Timestamp used when a request fails before any response exists.
    fn now(&self) -> DateTime<Utc> {
        if self.is_replay() {
            DateTime::<Utc>::UNIX_EPOCH
        } else {
            Utc::now()
        }
    }
}

impl<T: Transport + ?Sized> Transport for &T {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        (**self).get(url)
    }
    fn is_replay(&self) -> bool {
        (**self).is_replay()
    }
    fn now(&self) -> DateTime<Utc> {
        (**self).now()
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        (**self).get(url)
    }
    fn is_replay(&self) -> bool {
        (**self).is_replay()
    }
    fn now(&self) -> DateTime<Utc> {
        (**self).now()
    }
}

/// Spaces out requests to the same host.
#[derive(Debug)]
pub struct HostThrottle {
    min_interval: Duration,
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl HostThrottle {
    pub fn new(min_interval: Duration) -> Self {
        Self {
            min_interval,
            next_slot: Mutex::new(HashMap::new()),
        }
    }

    pub fn wait(&self, url: &str) {
        if self.min_interval.is_zero() {
            return;
        }
        let host = url::Url::parse(url)
            .ok()
            .and_then(|u| u.host_str().map(str::to_owned))
            .unwrap_or_default();
        let slot = {
            let mut slots = self.next_slot.lock().expect("throttle lock poisoned");
            let now = Instant::now();
            let slot = slots.get(&host).copied().filter(|s| *s > now).unwrap_or(now);
            slots.insert(host, slot + self.min_interval);
            slot
        };
        let now = Instant::now();
        if slot > now {
            thread::sleep(slot - now);
        }
    }
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    throttle: HostThrottle,
}

impl HttpTransport {
    pub fn new(timeout: Duration, min_host_interval: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .redirect(reqwest::redirect::Policy::none())
            .timeout(timeout)
            .user_agent(concat!("linkstudy/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| TransportError::Network {
                url: String::new(),
                message: e.to_string(),
            })?;
        Ok(Self {
            client,
            throttle: HostThrottle::new(min_host_interval),
        })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        self.throttle.wait(url);
        let resp = self.client.get(url).send().map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout { url: url.to_owned() }
            } else {
                TransportError::Network {
                    url: url.to_owned(),
                    message: e.to_string(),
                }
            }
        })?;
        let status = resp.status().as_u16();
        let location = resp
            .headers()
            .get(reqwest::header::LOCATION)
            .and_then(|v| v.to_str().ok())
            .map(str::to_owned);
        let body = resp.text().map_err(|e| TransportError::Network {
            url: url.to_owned(),
            message: e.to_string(),
        })?;
        Ok(HttpResponse {
            url: url.to_owned(),
            status,
            location,
            body,
            fetched_at: Utc::now(),
        })
    }
}

/// On-disk form of one recorded response.
///
/// `body` may be a JSON string (served verbatim) or any other JSON value,
/// which is served as its compact serialization. That keeps hand-written
/// registry fixtures readable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub url: String,
    pub status: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default)]
    pub body: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recorded_at: Option<DateTime<Utc>>,
}

impl Fixture {
    fn body_text(&self) -> String {
        match &self.body {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Null => String::new(),
            other => other.to_string(),
        }
    }

    pub fn file_name(url: &str) -> String {
        let digest = Sha256::digest(url.as_bytes());
        format!("{}.json", &hex::encode(digest)[..16])
    }
}

/// Serves responses recorded in a directory of `*.json` fixtures, keyed by URL.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    fixtures: HashMap<String, Fixture>,
}

impl ReplayTransport {
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, TransportError> {
        let dir = dir.as_ref();
        let mut paths = Vec::new();
        collect_json_files(dir, &mut paths)?;
        paths.sort();
        let mut fixtures = HashMap::new();
        for path in paths {
            let text = fs::read_to_string(&path).map_err(|e| TransportError::Fixture {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let fixture: Fixture =
                serde_json::from_str(&text).map_err(|e| TransportError::Fixture {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            fixtures.insert(fixture.url.clone(), fixture);
        }
        Ok(Self { fixtures })
    }

    pub fn from_fixtures(fixtures: impl IntoIterator<Item = Fixture>) -> Self {
        Self {
            fixtures: fixtures.into_iter().map(|f| (f.url.clone(), f)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

fn collect_json_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), TransportError> {
    let entries = fs::read_dir(dir).map_err(|e| TransportError::Fixture {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    for entry in entries {
        let path = entry
            .map_err(|e| TransportError::Fixture {
                path: dir.to_path_buf(),
                message: e.to_string(),
            })?
            .path();
        if path.is_dir() {
            collect_json_files(&path, out)?;
        } else if path.extension().is_some_and(|ext| ext == "json") {
            out.push(path);
        }
    }
    Ok(())
}

impl Transport for ReplayTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let fixture = self
            .fixtures
            .get(url)
            .ok_or_else(|| TransportError::NotRecorded { url: url.to_owned() })?;
        Ok(HttpResponse {
            url: url.to_owned(),
            status: fixture.status,
            location: fixture.location.clone(),
            body: fixture.body_text(),
            fetched_at: fixture.recorded_at.unwrap_or(DateTime::<Utc>::UNIX_EPOCH),
        })
    }

    fn is_replay(&self) -> bool {
        true
    }
}

/// Forwards to an inner transport and stores every response as a fixture.
pub struct RecordingTransport<T> {
    inner: T,
    dir: PathBuf,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> Result<Self, TransportError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| TransportError::Fixture {
            path: dir.clone(),
            message: e.to_string(),
        })?;
        Ok(Self { inner, dir })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let resp = self.inner.get(url)?;
        let fixture = Fixture {
            url: url.to_owned(),
            status: resp.status,
            location: resp.location.clone(),
            body: serde_json::Value::String(resp.body.clone()),
            recorded_at: Some(resp.fetched_at),
        };
        let path = self.dir.join(Fixture::file_name(url));
        let text = serde_json::to_string_pretty(&fixture).expect("fixture serializes");
        fs::write(&path, text).map_err(|e| TransportError::Fixture {
            path,
            message: e.to_string(),
        })?;
        Ok(resp)
    }

    fn is_replay(&self) -> bool {
        self.inner.is_replay()
    }
}

/// Result of following a redirect chain to its end.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalResponse {
    pub requested_url: String,
    pub final_url: String,
    pub status: u16,
    pub body: String,
    pub redirects: usize,
    pub fetched_at: DateTime<Utc>,
}

pub fn fetch_following<T: Transport + ?Sized>(
    transport: &T,
    url: &str,
    max_redirects: usize,
) -> Result<FinalResponse, TransportError> {
    let mut current = url.to_owned();
    let mut redirects = 0;
    loop {
        let resp = transport.get(&current)?;
        if !resp.is_redirect() {
            return Ok(FinalResponse {
                requested_url: url.to_owned(),
                final_url: current,
                status: resp.status,
                body: resp.body,
                redirects,
                fetched_at: resp.fetched_at,
            });
        }
        if redirects == max_redirects {
            return Err(TransportError::TooManyRedirects {
                url: url.to_owned(),
                limit: max_redirects,
            });
        }
        let location = resp.location.unwrap_or_default();
        let base = url::Url::parse(&current).map_err(|e| TransportError::InvalidUrl {
            url: current.clone(),
            message: e.to_string(),
        })?;
        current = base
            .join(&location)
            .map_err(|e| TransportError::InvalidUrl {
                url: location.clone(),
                message: e.to_string(),
            })?
            .to_string();
        redirects += 1;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: usize,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

/// Follows redirects and retries network failures and 5xx answers with
/// exponential backoff. The last outcome is returned once attempts run out.
pub fn fetch_with_retry<T: Transport + ?Sized>(
    transport: &T,
    url: &str,
    max_redirects: usize,
    retry: RetryPolicy,
) -> Result<FinalResponse, TransportError> {
    let attempts = retry.attempts.max(1);
    let mut attempt = 0;
    loop {
        attempt += 1;
        let outcome = fetch_following(transport, url, max_redirects);
        let retryable = match &outcome {
            Ok(resp) => resp.status >= 500,
            Err(TransportError::Network { .. } | TransportError::Timeout { .. }) => true,
            Err(_) => false,
        };
        if !retryable || attempt >= attempts {
            return outcome;
        }
        if !transport.is_replay() {
            let delay = retry.base_delay * 2u32.saturating_pow(attempt as u32 - 1);
            log::debug!("retrying {url} in {delay:?} (attempt {attempt}/{attempts})");
            thread::sleep(delay);
        }
    }
}
