//! Transport: one HTTP or mock backend per endpoint, with retries and an
//! in-flight request cap.

use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use rand::Rng;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;

use crate::config::EndpointConfig;
use crate::mock::MockBackend;
use crate::GatewayError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub prompt: String,
    /// JSON schema the answer must follow, sent as `response_format`.
    pub schema: Option<Value>,
}

impl ChatRequest {
    pub fn text(prompt: impl Into<String>) -> Self {
        ChatRequest {
            prompt: prompt.into(),
            schema: None,
        }
    }
}

/// Failure of a single attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum AttemptError {
    /// Worth retrying: 408, 429, 5xx, timeouts and connection errors.
    Transient(String),
    Fatal(String),
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    /// Sends one request and returns the completion text (empty if the
    /// endpoint returned no content).
    async fn complete(&self, cfg: &EndpointConfig, req: &ChatRequest) -> Result<String, AttemptError>;
}

pub struct HttpBackend {
    client: reqwest::Client,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(cfg: &EndpointConfig) -> Result<Self, GatewayError> {
        let api_key = match &cfg.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| GatewayError::MissingApiKey(var.clone()))?),
            None => None,
        };
        let client = reqwest::Client::builder()
            .timeout(cfg.timeout())
            .build()
            .map_err(|e| GatewayError::Config(format!("http client: {e}")))?;
        Ok(HttpBackend { client, api_key })
    }

    fn headers(&self, cfg: &EndpointConfig) -> Vec<(String, String)> {
        let key = self.api_key.as_deref().unwrap_or("");
        if cfg.headers.is_empty() {
            return match &self.api_key {
                Some(k) => vec![("Authorization".into(), format!("Bearer {k}"))],
                None => Vec::new(),
            };
        }
        cfg.headers
            .iter()
            .map(|(k, v)| (k.clone(), v.replace("{api_key}", key)))
            .collect()
    }
}

pub fn request_body(cfg: &EndpointConfig, req: &ChatRequest) -> Value {
    let mut body = json!({
        "model": cfg.wire_model(),
        "messages": [{"role": "user", "content": req.prompt}],
        "temperature": cfg.temperature,
    });
    if let Some(schema) = &req.schema {
        body["response_format"] = json!({
            "type": "json_schema",
            "json_schema": {"name": "score", "strict": true, "schema": schema},
        });
    }
    body
}

fn completions_url(base: &str) -> String {
    format!("{}/chat/completions", base.trim_end_matches('/'))
}

#[async_trait]
impl ChatBackend for HttpBackend {
    async fn complete(&self, cfg: &EndpointConfig, req: &ChatRequest) -> Result<String, AttemptError> {
        let mut builder = self
            .client
            .post(completions_url(&cfg.base_url))
            .json(&request_body(cfg, req));
        for (k, v) in self.headers(cfg) {
            builder = builder.header(k, v);
        }
        let resp = builder.send().await.map_err(|e| {
            if e.is_timeout() || e.is_connect() || e.is_request() {
                AttemptError::Transient(e.to_string())
            } else {
                AttemptError::Fatal(e.to_string())
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            let msg = format!("HTTP {status}: {}", truncate(&body, 300));
            return Err(if is_transient(status) {
                AttemptError::Transient(msg)
            } else {
                AttemptError::Fatal(msg)
            });
        }
        let value: Value = resp
            .json()
            .await
            .map_err(|e| AttemptError::Transient(format!("bad response body: {e}")))?;
        Ok(value["choices"][0]["message"]["content"]
            .as_str()
            .unwrap_or_default()
            .to_owned())
    }
}

fn is_transient(status: StatusCode) -> bool {
    status == StatusCode::TOO_MANY_REQUESTS
        || status == StatusCode::REQUEST_TIMEOUT
        || status.is_server_error()
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Result of a successful call.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub retries: u32,
    pub latency_ms: u64,
}

/// A configured endpoint: backend, retry policy and concurrency cap.
#[derive(Clone)]
pub struct Endpoint {
    cfg: Arc<EndpointConfig>,
    backend: Arc<dyn ChatBackend>,
    permits: Arc<Semaphore>,
}

impl std::fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Endpoint").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl Endpoint {
    /// Builds the HTTP or mock backend named by the config.
    pub fn from_config(cfg: EndpointConfig) -> Result<Self, GatewayError> {
        cfg.validate()?;
        let backend: Arc<dyn ChatBackend> = match cfg.mock.clone() {
            Some(kind) => Arc::new(MockBackend::new(kind)),
            None => Arc::new(HttpBackend::new(&cfg)?),
        };
        Ok(Self::with_backend(cfg, backend))
    }

    pub fn with_backend(cfg: EndpointConfig, backend: Arc<dyn ChatBackend>) -> Self {
        let permits = Arc::new(Semaphore::new(cfg.max_concurrency.max(1)));
        Endpoint {
            cfg: Arc::new(cfg),
            backend,
            permits,
        }
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    pub fn name(&self) -> &str {
        &self.cfg.name
    }

    /// Sends `req`, retrying transient failures with exponential backoff.
    pub async fn chat(&self, req: &ChatRequest) -> Result<Completion, GatewayError> {
        let started = Instant::now();
        let mut retries = 0;
        loop {
            let attempt = {
                let _permit = self.permits.acquire().await.expect("semaphore never closed");
                self.backend.complete(&self.cfg, req).await
            };
            match attempt {
                Ok(text) => {
                    if retries > 0 {
                        tracing::info!(endpoint = %self.cfg.name, retries, "request succeeded after retries");
                    }
                    return Ok(Completion {
                        text,
                        retries,
                        latency_ms: started.elapsed().as_millis() as u64,
                    });
                }
                Err(AttemptError::Fatal(msg)) => {
                    return Err(GatewayError::Request {
                        endpoint: self.cfg.name.clone(),
                        attempts: retries + 1,
                        message: msg,
                    })
                }
                Err(AttemptError::Transient(msg)) => {
                    if retries >= self.cfg.max_retries {
                        return Err(GatewayError::Request {
                            endpoint: self.cfg.name.clone(),
                            attempts: retries + 1,
                            message: msg,
                        });
                    }
                    let delay = backoff(self.cfg.retry_base_ms, retries);
                    tracing::warn!(endpoint = %self.cfg.name, attempt = retries + 1, ?delay, error = %msg, "retrying");
                    tokio::time::sleep(delay).await;
                    retries += 1;
                }
            }
        }
    }
}

/// `base * 2^retry`, scaled by a random factor in [0.5, 1.0).
pub fn backoff(base_ms: u64, retry: u32) -> Duration {
    let full = base_ms.saturating_mul(1u64 << retry.min(16)) as f64;
    let jitter = rand::rng().random_range(0.5..1.0);
    Duration::from_millis((full * jitter) as u64)
}
