use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::mock::MockKind;
use crate::GatewayError;

/// One chat-completions endpoint. Loaded from JSON; the API key itself is
/// only ever read from the environment variable named in `api_key_env`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    /// Identifier used in stored records.
    pub name: String,
    #[serde(default)]
    pub base_url: String,
    /// Model name sent on the wire; defaults to `name`.
    #[serde(default)]
    pub model_name: Option<String>,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_secs")]
    pub request_timeout_secs: f64,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    /// First backoff delay; doubles per retry, with jitter.
    #[serde(default = "default_backoff_ms")]
    pub retry_base_ms: u64,
    /// Extra request headers. `{api_key}` in a value is replaced by the key.
    /// When empty and a key is configured, `Authorization: Bearer {api_key}` is sent.
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    /// Answer locally instead of over HTTP.
    #[serde(default)]
    pub mock: Option<MockKind>,
}

fn default_temperature() -> f64 {
    1.0
}
fn default_max_retries() -> u32 {
    3
}
fn default_timeout_secs() -> f64 {
    120.0
}
fn default_concurrency() -> usize {
    4
}
fn default_backoff_ms() -> u64 {
    500
}

impl EndpointConfig {
    pub fn new(name: &str, base_url: &str) -> Self {
        EndpointConfig {
            name: name.to_owned(),
            base_url: base_url.to_owned(),
            model_name: None,
            api_key_env: None,
            temperature: default_temperature(),
            max_retries: default_max_retries(),
            request_timeout_secs: default_timeout_secs(),
            max_concurrency: default_concurrency(),
            retry_base_ms: default_backoff_ms(),
            headers: BTreeMap::new(),
            mock: None,
        }
    }

    pub fn mock(name: &str, kind: MockKind) -> Self {
        EndpointConfig {
            mock: Some(kind),
            ..Self::new(name, "")
        }
    }

    pub fn wire_model(&self) -> &str {
        self.model_name.as_deref().unwrap_or(&self.name)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.request_timeout_secs)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |msg: String| Err(GatewayError::Config(format!("endpoint `{}`: {msg}", self.name)));
        if self.name.trim().is_empty() {
            return Err(GatewayError::Config("endpoint name is empty".into()));
        }
        if self.max_concurrency == 0 {
            return bad("max_concurrency must be at least 1".into());
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.request_timeout_secs.is_nan() || self.request_timeout_secs <= 0.0 {
            return bad("request_timeout_secs must be positive".into());
        }
        if self.mock.is_none() && self.base_url.is_empty() {
            return bad("base_url is required unless `mock` is set".into());
        }
        Ok(())
    }
}

/// Models file: either a JSON array of endpoints or `{"models": [...]}`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ModelsFile {
    List(Vec<EndpointConfig>),
    Wrapped { models: Vec<EndpointConfig> },
}

pub fn load_models(path: &Path) -> Result<Vec<EndpointConfig>, GatewayError> {
    let text = read(path)?;
    let parsed: ModelsFile = serde_json::from_str(&text)
        .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
    let models = match parsed {
        ModelsFile::List(m) | ModelsFile::Wrapped { models: m } => m,
    };
    if models.is_empty() {
        return Err(GatewayError::Config(format!("{}: no models listed", path.display())));
    }
    let mut seen = std::collections::BTreeSet::new();
    for m in &models {
        m.validate()?;
        if !seen.insert(m.name.as_str()) {
            return Err(GatewayError::Config(format!("duplicate model name `{}`", m.name)));
        }
    }
    Ok(models)
}

/// A judge file holds exactly one endpoint.
pub fn load_judge(path: &Path) -> Result<EndpointConfig, GatewayError> {
    let text = read(path)?;
    let judge: EndpointConfig = serde_json::from_str(&text)
        .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
    judge.validate()?;
    Ok(judge)
}

fn read(path: &Path) -> Result<String, GatewayError> {
    std::fs::read_to_string(path)
        .map_err(|e| GatewayError::Config(format!("cannot read {}: {e}", path.display())))
}
