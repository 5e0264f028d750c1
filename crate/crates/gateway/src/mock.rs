//! Deterministic stand-ins for real endpoints. Output depends only on the
//! request text, so offline runs are reproducible.

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::client::{AttemptError, ChatBackend, ChatRequest};
use crate::config::EndpointConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MockKind {
    /// Always answers `text`.
    Echo { text: String },
    /// Heavily structured answers: headings, lists, bold, tables, code.
    Rich,
    /// Some structure mixed with plain paragraphs.
    Mid,
    /// Plain paragraphs only.
    Plain,
    /// Returns the text to rewrite unchanged.
    IdentityJudge,
    /// Adds a title when there is none and puts a heading above every plain paragraph.
    EnrichingJudge,
    /// Always answers `reply`, whatever the request.
    Fixed { reply: String },
}

pub struct MockBackend {
    kind: MockKind,
}

impl MockBackend {
    pub fn new(kind: MockKind) -> Self {
        MockBackend { kind }
    }
}

#[async_trait]
impl ChatBackend for MockBackend {
    async fn complete(&self, _cfg: &EndpointConfig, req: &ChatRequest) -> Result<String, AttemptError> {
        Ok(answer(&self.kind, req))
    }
}

pub fn answer(kind: &MockKind, req: &ChatRequest) -> String {
    match kind {
        MockKind::Echo { text } => text.clone(),
        MockKind::Fixed { reply } => reply.clone(),
        MockKind::Rich => rich(seed(&req.prompt)),
        MockKind::Mid => mid(seed(&req.prompt)),
        MockKind::Plain => plain(seed(&req.prompt)),
        MockKind::IdentityJudge | MockKind::EnrichingJudge if req.schema.is_some() => {
            judge_score_reply(&req.prompt)
        }
        MockKind::IdentityJudge => rewrite_payload(&req.prompt).to_owned(),
        MockKind::EnrichingJudge => enrich(rewrite_payload(&req.prompt)),
    }
}

fn seed(prompt: &str) -> u64 {
    let digest = Sha256::digest(prompt.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

const WORDS: [&str; 12] = [
    "growth", "policy", "evidence", "balance", "context", "impact", "method", "history", "risk",
    "practice", "value", "change",
];

fn word(h: u64, i: u64) -> &'static str {
    WORDS[((h >> (i % 48)) as usize + i as usize) % WORDS.len()]
}

fn sentence(h: u64, i: u64) -> String {
    format!(
        "The {} of {} shapes the {} in many ways",
        word(h, i),
        word(h, i + 1),
        word(h, i + 2)
    )
}

fn rich(h: u64) -> String {
    let items = 2 + h % 3;
    let rows = 1 + (h >> 8) % 2;
    let mut out = format!("# Overview\n\n{}.\n\n## Key points\n\n", sentence(h, 0));
    for i in 0..items {
        out.push_str(&format!("- **{}**: {}.\n", word(h, i), sentence(h, i + 3)));
    }
    out.push_str("\n## Details\n\n| Aspect | Note |\n|---|---|\n");
    for i in 0..rows {
        out.push_str(&format!("| {} | {} |\n", word(h, i + 5), word(h, i + 6)));
    }
    if h % 2 == 0 {
        out.push_str("\n```\nsummary()\n```\n");
    }
    out
}

fn mid(h: u64) -> String {
    let items = 2 + h % 3;
    let mut out = format!("# Answer\n\n{}.\n\n", sentence(h, 0));
    for i in 0..items {
        out.push_str(&format!("- {}\n", sentence(h, i + 1)));
    }
    out.push_str(&format!("\nIn short, **{}** matters.\n", word(h, 7)));
    out
}

fn plain(h: u64) -> String {
    (0..2 + h % 3)
        .map(|i| format!("{}. {}.", sentence(h, i), sentence(h, i + 4)))
        .collect::<Vec<_>>()
        .join("\n\n")
        + "\n"
}

/// Text after the first `###` line of the rewrite template.
fn rewrite_payload(prompt: &str) -> &str {
    match prompt.find("\n###\n") {
        Some(i) => &prompt[i + 5..],
        None => prompt,
    }
}

fn is_structured(block: &str) -> bool {
    let first = block.trim_start();
    let numbered = first
        .split_once(". ")
        .is_some_and(|(n, _)| !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()));
    ["#", "- ", "* ", "+ ", "|", "```", "~~~", ">"]
        .iter()
        .any(|p| first.starts_with(p))
        || numbered
}

fn enrich(text: &str) -> String {
    let blocks: Vec<&str> = text
        .split("\n\n")
        .map(str::trim)
        .filter(|b| !b.is_empty())
        .collect();
    let mut out: Vec<String> = Vec::new();
    if !blocks.iter().any(|b| b.starts_with('#')) {
        out.push("# Overview".into());
    }
    let mut point = 0;
    for block in blocks {
        if is_structured(block) {
            out.push(block.to_owned());
        } else {
            point += 1;
            out.push(format!("## Point {point}"));
            out.push(block.to_owned());
        }
    }
    out.join("\n\n") + "\n"
}

// Crude structure count used when a mock judge is asked for a score.
fn features(text: &str) -> usize {
    let lines: Vec<&str> = text.lines().map(str::trim_start).collect();
    [
        lines.iter().any(|l| l.starts_with('#')),
        lines.iter().any(|l| l.starts_with("- ") || l.starts_with("* ")),
        text.contains("**"),
        text.contains("```"),
        lines.iter().any(|l| l.starts_with('|')),
    ]
    .iter()
    .filter(|&&b| b)
    .count()
}

fn judge_score_reply(prompt: &str) -> String {
    let section = |marker: &str| prompt.split_once(marker).map(|(_, rest)| rest);
    let response = section("### Response\n").unwrap_or(prompt);
    let score = match section("### Reference\n") {
        Some(rest) => {
            let reference = rest.split("\n### Response\n").next().unwrap_or(rest);
            (features(response) as f64 / features(reference).max(1) as f64).min(1.0)
        }
        None => features(response) as f64 / 5.0,
    };
    format!("{{\"score\": {score}}}")
}
