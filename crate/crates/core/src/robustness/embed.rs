//! Sentence embedders: the inference server's embedding endpoint plus two
//! deterministic offline implementations.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};

pub const DEFAULT_DIMENSION: usize = 384;
pub const DEFAULT_EMBED_MODEL: &str = "all-minilm";

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("embedding server request failed: {0}")]
    Http(String),
    #[error("embedding server answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected embedding response: {0}")]
    Protocol(String),
    #[error("embedder capacity of {0} distinct texts exceeded")]
    Capacity(usize),
}

pub trait Embedder: Send + Sync {
    fn model_id(&self) -> &str;
    /// One vector per input, all of the same length.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        (**self).embed(texts)
    }
}

impl<T: Embedder + ?Sized> Embedder for Box<T> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        (**self).embed(texts)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// `POST {base}/api/embed` with `{model, input}`.
pub struct OllamaEmbedder {
    base_url: String,
    model: String,
    http: reqwest::blocking::Client,
}

impl OllamaEmbedder {
    pub fn new(base_url: &str, model: &str, timeout: Duration) -> Result<Self, EmbedError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EmbedError::Http(e.to_string()))?;
        Ok(Self {
            base_url: base_url.trim_end_matches('/').to_owned(),
            model: model.to_owned(),
            http,
        })
    }
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

impl Embedder for OllamaEmbedder {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let resp = self
            .http
            .post(format!("{}/api/embed", self.base_url))
            .json(&json!({"model": self.model, "input": texts}))
            .send()
            .map_err(|e| EmbedError::Http(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| EmbedError::Http(e.to_string()))?;
        if status != 200 {
            return Err(EmbedError::Status { status, body });
        }
        let parsed: EmbedResponse =
            serde_json::from_str(&body).map_err(|e| EmbedError::Protocol(e.to_string()))?;
        if parsed.embeddings.len() != texts.len() {
            return Err(EmbedError::Protocol(format!(
                "{} embeddings for {} inputs",
                parsed.embeddings.len(),
                texts.len()
            )));
        }
        Ok(parsed.embeddings)
    }
}

/// Feature-hashed bag of words and character trigrams, L2-normalized.
/// Texts sharing vocabulary land close together; no model download needed.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
    model_id: String,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension: dimension.max(1),
            model_id: format!("hashing-{dimension}"),
        }
    }

    fn bucket(&self, feature: &str) -> (usize, f64) {
        let digest = Sha256::digest(feature.as_bytes());
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        let h = u64::from_le_bytes(head);
        let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
        ((h % self.dimension as u64) as usize, sign)
    }

    fn vector(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        let lower = text.to_lowercase();
        for word in lower.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
            let (i, s) = self.bucket(&format!("w:{word}"));
            v[i] += 2.0 * s;
            let padded: Vec<char> = format!("#{word}#").chars().collect();
            for tri in padded.windows(3) {
                let (i, s) = self.bucket(&format!("c:{}", tri.iter().collect::<String>()));
                v[i] += s;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl Embedder for HashingEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// Gives every distinct text its own unit basis vector, so any two different
/// texts are orthogonal. Assignment is first-come and stable for the life of
/// the embedder.
#[derive(Debug)]
pub struct OneHotEmbedder {
    dimension: usize,
    assigned: Mutex<HashMap<String, usize>>,
}

impl OneHotEmbedder {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            assigned: Mutex::new(HashMap::new()),
        }
    }
}

impl Default for OneHotEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl Embedder for OneHotEmbedder {
    fn model_id(&self) -> &str {
        "one-hot"
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let mut assigned = self.assigned.lock().expect("lock");
        texts
            .iter()
            .map(|t| {
                let next = assigned.len();
                let index = *assigned.entry(t.clone()).or_insert(next);
                if index >= self.dimension {
                    return Err(EmbedError::Capacity(self.dimension));
                }
                let mut v = vec![0.0; self.dimension];
                v[index] = 1.0;
                Ok(v)
            })
            .collect()
    }
}
