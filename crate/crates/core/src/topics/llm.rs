//! Client side of the local inference server.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    pub seed: u64,
    pub temperature: f64,
    /// Ask the server to constrain output to JSON.
    pub json_output: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("LLM server request failed: {0}")]
    Http(String),
    #[error("LLM server answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected LLM server response: {0}")]
    Protocol(String),
    #[error("{0}")]
    Unavailable(String),
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError>;
}

impl<T: LlmClient + ?Sized> LlmClient for &T {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for Box<T> {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

/// Ollama-style chat endpoint (`POST {base}/api/chat`, non-streaming).
pub struct OllamaClient {
    base_url: String,
    http: reqwest::blocking::Client,
}

impl OllamaClient {
    pub fn new(base_url: &str, timeout: Duration) -> Result<Self, LlmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Http(e.to_string()))?;
        Ok(Self {
            base_url: base_url.trim_end_matches('/').to_owned(),
            http,
        })
    }

    pub fn request_body(request: &LlmRequest) -> serde_json::Value {
        let mut body = json!({
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "stream": false,
            "options": {"seed": request.seed, "temperature": request.temperature},
        });
        if request.json_output {
            body["format"] = json!("json");
        }
        body
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl LlmClient for OllamaClient {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        let url = format!("{}/api/chat", self.base_url);
        let resp = self
            .http
            .post(&url)
            .json(&Self::request_body(request))
            .send()
            .map_err(|e| LlmError::Http(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| LlmError::Http(e.to_string()))?;
        if status != 200 {
            return Err(LlmError::Status { status, body: text });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| LlmError::Protocol(e.to_string()))?;
        Ok(parsed.message.content)
    }
}
