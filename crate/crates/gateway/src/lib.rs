//! Generation, rewriting and LLM-judge scoring against chat-completions
//! endpoints, with deterministic mock backends for offline runs.

pub mod client;
pub mod config;
pub mod mock;
pub mod ops;

use thiserror::Error;

pub use client::{ChatBackend, ChatRequest, Completion, Endpoint};
pub use config::{load_judge, load_models, EndpointConfig};
pub use mock::MockKind;
pub use ops::{
    generate, judge_score_pllm, judge_score_rllm, rewrite, JudgePrompts, OpError, RewritePrompt,
    DEFAULT_REWRITE_TEMPLATE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("environment variable `{0}` holding the API key is not set")]
    MissingApiKey(String),
    #[error("endpoint `{endpoint}` failed after {attempts} attempt(s): {message}")]
    Request {
        endpoint: String,
        attempts: u32,
        message: String,
    },
    #[error("expected a `{expected}` response, got `{found}`")]
    WrongPhase { expected: String, found: String },
    #[error("no rewritten reference for task `{task_id}` and model `{model}`")]
    MissingReference { task_id: String, model: String },
    #[error("bad prompt template: {0}")]
    Template(String),
}
