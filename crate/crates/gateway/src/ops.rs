//! Pipeline phases that talk to an endpoint: generate, rewrite, judge.

use std::sync::OnceLock;

use mdaware_core::corpus::{now_millis, Metric, Phase, ResponseMeta, ResponseRecord, ScoreRecord, TaskRecord};
use mdaware_core::scoring::config_hash;
use regex::Regex;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::client::{ChatRequest, Endpoint};
use crate::GatewayError;

/// Rewrite instruction given to the judge; `{text}` is the original response.
pub const DEFAULT_REWRITE_TEMPLATE: &str = "Given the text below, rewrite it using Markdown format to make the output more structured, and increase the readability. \n\nNote that if possible, keep the content the same, just adjust the formatting.\n###\n{text}";

/// Relative change in alphanumeric characters above which a rewrite is flagged.
pub const DRIFT_THRESHOLD: f64 = 0.4;

#[derive(Debug, Error)]
#[error("task `{task_id}` ({model}): {source}")]
pub struct OpError {
    pub task_id: String,
    pub model: String,
    #[source]
    pub source: GatewayError,
}

fn op_err(task_id: &str, model: &str, source: GatewayError) -> OpError {
    OpError {
        task_id: task_id.to_owned(),
        model: model.to_owned(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RewritePrompt {
    template: String,
}

impl Default for RewritePrompt {
    fn default() -> Self {
        RewritePrompt {
            template: DEFAULT_REWRITE_TEMPLATE.to_owned(),
        }
    }
}

impl RewritePrompt {
    pub fn new(template: impl Into<String>) -> Result<Self, GatewayError> {
        let template = template.into();
        match template.matches("{text}").count() {
            1 => Ok(RewritePrompt { template }),
            n => Err(GatewayError::Template(format!("expected one {{text}} slot, found {n}"))),
        }
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn render(&self, text: &str) -> String {
        self.template.replacen("{text}", text, 1)
    }

    pub fn hash(&self) -> String {
        config_hash(&self.template)
    }
}

/// Phase 1: send the task prompt verbatim and store the raw answer.
pub async fn generate(task: &TaskRecord, ep: &Endpoint) -> Result<ResponseRecord, OpError> {
    let done = ep
        .chat(&ChatRequest::text(task.prompt.clone()))
        .await
        .map_err(|e| op_err(&task.task_id, ep.name(), e))?;
    let empty = done.text.trim().is_empty();
    if empty {
        tracing::warn!(task = %task.task_id, model = ep.name(), "empty completion");
    }
    Ok(ResponseRecord {
        task_id: task.task_id.clone(),
        model: ep.name().to_owned(),
        phase: Phase::Generated,
        text: done.text,
        judge: None,
        created_at: now_millis(),
        meta: ResponseMeta {
            endpoint: Some(ep.config().base_url.clone()).filter(|u| !u.is_empty()),
            latency_ms: Some(done.latency_ms),
            retries: done.retries,
            empty,
            drift_warning: false,
        },
        extra: Default::default(),
    })
}

fn alnum_count(s: &str) -> usize {
    s.chars().filter(|c| c.is_alphanumeric()).count()
}

/// True when the rewrite's alphanumeric count moved by more than [`DRIFT_THRESHOLD`].
pub fn drifted(original: &str, rewritten: &str) -> bool {
    let (a, b) = (alnum_count(original), alnum_count(rewritten));
    if a == 0 {
        return true;
    }
    (b as f64 - a as f64).abs() / a as f64 > DRIFT_THRESHOLD
}

/// Phase 2: ask the judge to restructure a generated response.
pub async fn rewrite(
    response: &ResponseRecord,
    judge: &Endpoint,
    prompt: &RewritePrompt,
) -> Result<ResponseRecord, OpError> {
    let fail = |e| op_err(&response.task_id, &response.model, e);
    if response.phase != Phase::Generated {
        return Err(fail(GatewayError::WrongPhase {
            expected: "generated".into(),
            found: "rewritten".into(),
        }));
    }
    let done = judge
        .chat(&ChatRequest::text(prompt.render(&response.text)))
        .await
        .map_err(fail)?;
    let drift_warning = drifted(&response.text, &done.text);
    if drift_warning {
        tracing::warn!(task = %response.task_id, model = %response.model, "rewrite changed content length by more than 40%");
    }
    Ok(ResponseRecord {
        task_id: response.task_id.clone(),
        model: response.model.clone(),
        phase: Phase::Rewritten,
        judge: Some(judge.name().to_owned()),
        created_at: now_millis(),
        meta: ResponseMeta {
            endpoint: Some(judge.config().base_url.clone()).filter(|u| !u.is_empty()),
            latency_ms: Some(done.latency_ms),
            retries: done.retries,
            empty: done.text.trim().is_empty(),
            drift_warning,
        },
        text: done.text,
        extra: Default::default(),
    })
}

/// Prompts for the two judge baselines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JudgePrompts {
    pub pllm: String,
    pub rllm: String,
}

impl Default for JudgePrompts {
    fn default() -> Self {
        JudgePrompts {
            pllm: "Rate how well the response below uses Markdown to structure its content, on a scale from 0 to 1, where 0 means no useful structure and 1 means excellent structure. Answer with a JSON object of the form {\"score\": <number>}.\n### Response\n{response}".into(),
            rllm: "Rate how well the response below uses Markdown to structure its content, on a scale from 0 to 1. A well-structured reference version of the same content is given for comparison. Answer with a JSON object of the form {\"score\": <number>}.\n### Reference\n{reference}\n### Response\n{response}".into(),
        }
    }
}

fn score_schema() -> Value {
    json!({
        "type": "object",
        "properties": {"score": {"type": "number"}},
        "required": ["score"],
        "additionalProperties": false,
    })
}

/// Pulls a score out of a judge reply: strict JSON first, then the first
/// number in the text.
pub fn parse_score(reply: &str) -> Option<f64> {
    static NUMBER: OnceLock<Regex> = OnceLock::new();
    static FIELD: OnceLock<Regex> = OnceLock::new();
    let trimmed = reply.trim();
    if let Ok(v) = serde_json::from_str::<Value>(trimmed) {
        if let Some(x) = v.get("score").and_then(Value::as_f64).or_else(|| v.as_f64()) {
            return Some(x).filter(|x| x.is_finite());
        }
    }
    let field = FIELD.get_or_init(|| Regex::new(r#""score"\s*:\s*(-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)"#).unwrap());
    let number = NUMBER.get_or_init(|| Regex::new(r"-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?").unwrap());
    field
        .captures(trimmed)
        .map(|c| c.get(1).unwrap().as_str())
        .or_else(|| number.find(trimmed).map(|m| m.as_str()))
        .and_then(|s| s.parse::<f64>().ok())
        .filter(|x| x.is_finite())
}

async fn judge_score(
    task_id: &str,
    model: &str,
    metric: Metric,
    prompt: String,
    judge: &Endpoint,
    hash_input: &impl Serialize,
    mut detail: serde_json::Map<String, Value>,
) -> Result<ScoreRecord, OpError> {
    let req = ChatRequest {
        prompt,
        schema: Some(score_schema()),
    };
    let tries = judge.config().max_retries + 1;
    let mut last = String::new();
    let mut parsed = None;
    let mut attempts = 0;
    while attempts < tries && parsed.is_none() {
        attempts += 1;
        last = judge
            .chat(&req)
            .await
            .map_err(|e| op_err(task_id, model, e))?
            .text;
        parsed = parse_score(&last);
    }
    detail.insert("raw".into(), Value::String(last));
    detail.insert("attempts".into(), json!(attempts));
    detail.insert("judge".into(), json!(judge.name()));
    let (value, invalid) = match parsed {
        Some(x) => {
            let clamped = x.clamp(0.0, 1.0);
            detail.insert("clamped".into(), json!(clamped != x));
            (clamped, false)
        }
        None => {
            tracing::warn!(task = task_id, model, %metric, "judge gave no usable score");
            (0.0, true)
        }
    };
    Ok(ScoreRecord {
        task_id: task_id.to_owned(),
        model: model.to_owned(),
        metric,
        value,
        detail: Value::Object(detail),
        config_hash: config_hash(hash_input),
        invalid,
        extra: Default::default(),
    })
}

#[derive(Serialize)]
struct JudgeHashInput<'a> {
    metric: Metric,
    template: &'a str,
    judge: &'a str,
    model: &'a str,
    temperature: f64,
}

fn hash_input<'a>(metric: Metric, template: &'a str, judge: &'a Endpoint) -> JudgeHashInput<'a> {
    JudgeHashInput {
        metric,
        template,
        judge: judge.name(),
        model: judge.config().wire_model(),
        temperature: judge.config().temperature,
    }
}

/// Prompt-only judge baseline.
pub async fn judge_score_pllm(
    response: &ResponseRecord,
    judge: &Endpoint,
    prompts: &JudgePrompts,
) -> Result<ScoreRecord, OpError> {
    let prompt = prompts.pllm.replacen("{response}", &response.text, 1);
    judge_score(
        &response.task_id,
        &response.model,
        Metric::Pllm,
        prompt,
        judge,
        &hash_input(Metric::Pllm, &prompts.pllm, judge),
        serde_json::Map::new(),
    )
    .await
}

/// Reference-aided judge baseline; the rewritten response serves as reference.
pub async fn judge_score_rllm(
    response: &ResponseRecord,
    reference: Option<&ResponseRecord>,
    judge: &Endpoint,
    prompts: &JudgePrompts,
) -> Result<ScoreRecord, OpError> {
    let Some(reference) = reference else {
        return Err(op_err(
            &response.task_id,
            &response.model,
            GatewayError::MissingReference {
                task_id: response.task_id.clone(),
                model: response.model.clone(),
            },
        ));
    };
    let prompt = prompts
        .rllm
        .replacen("{reference}", &reference.text, 1)
        .replacen("{response}", &response.text, 1);
    let mut detail = serde_json::Map::new();
    detail.insert("response".into(), json!(response.text));
    detail.insert("reference".into(), json!(reference.text));
    judge_score(
        &response.task_id,
        &response.model,
        Metric::Rllm,
        prompt,
        judge,
        &hash_input(Metric::Rllm, &prompts.rllm, judge),
        detail,
    )
    .await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_is_singleton_slot() {
        assert!(RewritePrompt::new("no slot").is_err());
        assert!(RewritePrompt::new("{text} {text}").is_err());
        let p = RewritePrompt::default();
        assert!(p.render("hello").ends_with("###\nhello"));
        assert_eq!(p.hash().len(), 16);
    }

    #[test]
    fn score_parsing() {
        assert_eq!(parse_score(r#"{"score": 0.7}"#), Some(0.7));
        assert_eq!(parse_score("0.4"), Some(0.4));
        assert_eq!(parse_score(r#"Sure! {"score": 0.25} hope that helps"#), Some(0.25));
        assert_eq!(parse_score("I would say 0.9 overall"), Some(0.9));
        assert_eq!(parse_score("The formatting is quite good."), None);
        assert_eq!(parse_score(r#"{"score": "high"}"#), None);
    }

    #[test]
    fn drift_rule() {
        assert!(drifted("", "anything"));
        assert!(!drifted("abcde fghij", "# abcde\n\n- fghij"));
        assert!(drifted("abcdefghij", "abc"));
        assert!(drifted("ab", "abcdefgh"));
    }
}
