//! Workbench configuration, read from a TOML file.
//!
//! ```toml
//! seed = 42
//! out_dir = "out"
//!
//! [registry]
//! base_url = "https://pypi.org"
//! replay_dir = "fixtures/registry"
//!
//! [llm]
//! base_url = "http://localhost:11434"
//! model = "llama3.3:70b"
//!
//! [[responses]]
//! survey = "repository_url"
//! csv = "survey.csv"
//!
//! [[questions]]
//! id = "SQ-1.1"
//! survey = "repository_url"
//! column = "Why is the link missing?"
//! text = "Why is the repository link missing?"
//! ```
//!
//! Relative paths are resolved against the directory of the config file.
//! `LINKSTUDY_LLM_URL` overrides `llm.base_url`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::responses::{Denylist, SurveyId, DEFAULT_DENYLIST};
use crate::topics::{EngineConfig, QuestionSpec};
use crate::transport::RetryPolicy;

pub const LLM_URL_ENV: &str = "LINKSTUDY_LLM_URL";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistryConfig {
    pub base_url: String,
    pub replay_dir: Option<PathBuf>,
    pub record_dir: Option<PathBuf>,
    pub concurrency: usize,
    pub min_host_interval_ms: u64,
    pub timeout_secs: u64,
    /// Attempts per request, including the first.
    pub retries: usize,
    pub retry_base_delay_ms: u64,
    pub max_redirects: usize,
    pub funding_branches: Vec<String>,
    pub fetch_funding: bool,
    /// Top-percentile cut-offs for the ecosystem report, in percent.
    pub percentiles: Vec<f64>,
}

impl Default for RegistryConfig {
    fn default() -> Self {
        Self {
            base_url: "https://pypi.org".into(),
            replay_dir: None,
            record_dir: None,
            concurrency: 8,
            min_host_interval_ms: 100,
            timeout_secs: 20,
            retries: 3,
            retry_base_delay_ms: 500,
            max_redirects: 10,
            funding_branches: vec!["main".into(), "master".into()],
            fetch_funding: true,
            percentiles: vec![1.0],
        }
    }
}

impl RegistryConfig {
    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            attempts: self.retries,
            base_delay: Duration::from_millis(self.retry_base_delay_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub batch_size: usize,
    pub retry_limit: usize,
    pub json_output: bool,
    pub question_parallelism: usize,
    pub timeout_secs: u64,
    /// Use the offline keyword heuristic instead of a server.
    pub mock: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:11434".into(),
            model: "llama3.3:70b".into(),
            temperature: 0.0,
            batch_size: 10,
            retry_limit: 3,
            json_output: true,
            question_parallelism: 1,
            timeout_secs: 600,
            mock: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub model: String,
    /// Defaults to `llm.base_url`.
    pub base_url: Option<String>,
    /// Use the offline hashing embedder.
    pub mock: bool,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            model: crate::robustness::embed::DEFAULT_EMBED_MODEL.into(),
            base_url: None,
            mock: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseFile {
    pub survey: SurveyId,
    pub csv: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionConfig {
    pub id: String,
    pub survey: SurveyId,
    pub text: String,
    /// CSV header of the answer column; defaults to the question id.
    pub column: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub ui_bundle: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkbenchConfig {
    /// Required before any randomized or model-driven stage runs.
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    /// Entries added to the built-in placeholder denylist.
    pub extra_denylist: Vec<String>,
    pub registry: RegistryConfig,
    pub llm: LlmConfig,
    pub embedding: EmbeddingConfig,
    pub evaluation: EvaluationConfig,
    pub responses: Vec<ResponseFile>,
    pub questions: Vec<QuestionConfig>,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        Self {
            seed: None,
            out_dir: PathBuf::from("out"),
            extra_denylist: Vec::new(),
            registry: RegistryConfig::default(),
            llm: LlmConfig::default(),
            embedding: EmbeddingConfig::default(),
            evaluation: EvaluationConfig::default(),
            responses: Vec::new(),
            questions: Vec::new(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl WorkbenchConfig {
    /// Parses, resolves relative paths, applies the environment override and
    /// validates. A config file must set `seed`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.to_path_buf(), message },
            other => other,
        })?;
        if config.seed.is_none() {
            return Err(ConfigError::invalid("seed", "missing; every run needs an explicit seed"));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.apply_env(std::env::var(LLM_URL_ENV).ok());
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::new(),
            message: e.message().to_owned(),
        })
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.out_dir);
        for p in [&mut self.registry.replay_dir, &mut self.registry.record_dir, &mut self.evaluation.ui_bundle]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
        for r in &mut self.responses {
            resolve(base, &mut r.csv);
        }
    }

    pub fn apply_env(&mut self, llm_url: Option<String>) {
        if let Some(url) = llm_url.filter(|u| !u.trim().is_empty()) {
            self.llm.base_url = url;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("registry.concurrency", self.registry.concurrency),
            ("registry.retries", self.registry.retries),
            ("llm.batch_size", self.llm.batch_size),
            ("llm.retry_limit", self.llm.retry_limit),
            ("llm.question_parallelism", self.llm.question_parallelism),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(ConfigError::invalid(field, "must be at least 1"));
            }
        }
        if !self.llm.temperature.is_finite() || self.llm.temperature < 0.0 {
            return Err(ConfigError::invalid("llm.temperature", "must be a non-negative number"));
        }
        if url::Url::parse(&self.registry.base_url).is_err() {
            return Err(ConfigError::invalid("registry.base_url", "not a valid URL"));
        }
        if url::Url::parse(&self.llm.base_url).is_err() {
            return Err(ConfigError::invalid("llm.base_url", "not a valid URL"));
        }
        if let Some(p) = self.registry.percentiles.iter().find(|p| !(**p > 0.0 && **p <= 100.0)) {
            return Err(ConfigError::invalid("registry.percentiles", format!("{p} is outside (0, 100]")));
        }
        let mut ids = BTreeSet::new();
        for (i, q) in self.questions.iter().enumerate() {
            if q.id.trim().is_empty() {
                return Err(ConfigError::invalid(format!("questions[{i}].id"), "must not be empty"));
            }
            if q.text.trim().is_empty() {
                return Err(ConfigError::invalid(format!("questions[{i}].text"), "must not be empty"));
            }
            if !ids.insert(&q.id) {
                return Err(ConfigError::invalid(format!("questions[{i}].id"), format!("duplicate id {}", q.id)));
            }
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed
            .ok_or_else(|| ConfigError::invalid("seed", "missing; set it in the config file or pass --seed"))
    }

    pub fn denylist(&self) -> Denylist {
        Denylist::new(DEFAULT_DENYLIST.iter().copied().map(String::from).chain(self.extra_denylist.iter().cloned()))
    }

    pub fn questions_for(&self, survey: SurveyId) -> Vec<QuestionSpec> {
        self.questions
            .iter()
            .filter(|q| q.survey == survey)
            .map(|q| QuestionSpec { question_id: q.id.clone(), text: q.text.clone() })
            .collect()
    }

    pub fn engine_config(&self) -> Result<EngineConfig, ConfigError> {
        Ok(EngineConfig {
            model_id: self.llm.model.clone(),
            seed: self.require_seed()?,
            temperature: self.llm.temperature,
            batch_size: self.llm.batch_size,
            retry_limit: self.llm.retry_limit,
            json_output: self.llm.json_output,
            question_parallelism: self.llm.question_parallelism,
        })
    }

    pub fn embedding_base_url(&self) -> &str {
        self.embedding.base_url.as_deref().unwrap_or(&self.llm.base_url)
    }
}
