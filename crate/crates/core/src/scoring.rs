//! Structural similarity scores between a response and its rewritten reference.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::md_structure::{TagKind, TagName, TagSequence, TagToken, VOCABULARY_VERSION};
use crate::par::Parallelism;

/// Unit of comparison for the Markdown Awareness score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareMode {
    /// One symbol per tag token.
    #[default]
    Token,
    /// One symbol per character of the serialized `<tag></tag>` string.
    Char,
}

/// Levenshtein distance with unit costs.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (i, x) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in short.iter().enumerate() {
            let above = row[j + 1];
            let cost = if x == y { diag } else { diag + 1 };
            row[j + 1] = cost.min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[short.len()]
}

/// Token-level edit distance between two tag sequences.
pub fn edit_distance(a: &TagSequence, b: &TagSequence) -> usize {
    levenshtein(a.tokens(), b.tokens())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaScore {
    pub value: f64,
    pub distance: usize,
    pub len_r: usize,
    pub len_ref: usize,
}

impl MaScore {
    fn from_parts(distance: usize, len_r: usize, len_ref: usize) -> Self {
        let longest = len_r.max(len_ref);
        let value = if longest == 0 {
            1.0
        } else {
            1.0 - distance as f64 / longest as f64
        };
        MaScore {
            value,
            distance,
            len_r,
            len_ref,
        }
    }
}

/// `1 - editDistance(r, ref) / max(len(r), len(ref))`, or 1 when both are empty.
pub fn ma_score(response: &TagSequence, reference: &TagSequence) -> MaScore {
    ma_score_with(response, reference, CompareMode::Token)
}

pub fn ma_score_with(response: &TagSequence, reference: &TagSequence, mode: CompareMode) -> MaScore {
    match mode {
        CompareMode::Token => MaScore::from_parts(
            edit_distance(response, reference),
            response.len(),
            reference.len(),
        ),
        CompareMode::Char => {
            let r: Vec<char> = response.to_html_string().chars().collect();
            let f: Vec<char> = reference.to_html_string().chars().collect();
            MaScore::from_parts(levenshtein(&r, &f), r.len(), f.len())
        }
    }
}

/// Scores (response, reference) pairs; output order follows input order.
pub fn ma_score_batch(
    pairs: &[(TagSequence, TagSequence)],
    mode: CompareMode,
    par: Parallelism,
) -> Vec<MaScore> {
    par.map(pairs, |(r, f)| ma_score_with(r, f, mode))
}

/// Element class used by the decayed rule-based scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementClass {
    Heading,
    Code,
    Math,
    List,
    Bold,
    /// Any other element; each name is its own class.
    Other(TagName),
    /// Closing tokens do not count.
    NonScoring,
}

impl ElementClass {
    /// Key used in [`DRuleConfig::weights`]: `heading`, `code`, …, or `other:<name>`.
    pub fn key(self) -> String {
        match self {
            ElementClass::Heading => "heading".into(),
            ElementClass::Code => "code".into(),
            ElementClass::Math => "math".into(),
            ElementClass::List => "list".into(),
            ElementClass::Bold => "bold".into(),
            ElementClass::Other(name) => format!("other:{name}"),
            ElementClass::NonScoring => "non_scoring".into(),
        }
    }
}

pub fn classify_token(tok: TagToken) -> ElementClass {
    use TagName::*;
    if tok.kind == TagKind::Close {
        return ElementClass::NonScoring;
    }
    match tok.name {
        H1 | H2 | H3 | H4 | H5 | H6 => ElementClass::Heading,
        Code | Pre => ElementClass::Code,
        Math => ElementClass::Math,
        Ul | Ol | Li => ElementClass::List,
        Strong => ElementClass::Bold,
        other => ElementClass::Other(other),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DRuleConfigError {
    #[error("gamma must lie strictly between 0 and 1, got {0}")]
    Gamma(f64),
    #[error("weight for `{class}` must be positive, got {weight}")]
    Weight { class: String, weight: f64 },
}

/// Parameters of the decayed rule-based scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DRuleConfig {
    pub gamma: f64,
    /// Weight per class key; classes not listed use `default_weight`.
    pub weights: BTreeMap<String, f64>,
    pub default_weight: f64,
}

impl Default for DRuleConfig {
    fn default() -> Self {
        let weights = ["heading", "code", "math", "list", "bold"]
            .into_iter()
            .map(|k| (k.to_owned(), 10.0))
            .collect();
        DRuleConfig {
            gamma: 0.5,
            weights,
            default_weight: 5.0,
        }
    }
}

impl DRuleConfig {
    pub fn validate(&self) -> Result<(), DRuleConfigError> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(DRuleConfigError::Gamma(self.gamma));
        }
        let all = self
            .weights
            .iter()
            .map(|(k, w)| (k.as_str(), *w))
            .chain(std::iter::once(("default", self.default_weight)));
        for (class, weight) in all {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(DRuleConfigError::Weight {
                    class: class.to_owned(),
                    weight,
                });
            }
        }
        Ok(())
    }

    pub fn weight(&self, class: ElementClass) -> f64 {
        self.weights
            .get(&class.key())
            .copied()
            .unwrap_or(self.default_weight)
    }
}

/// Occurrence counts per scoring class.
pub fn class_counts(seq: &TagSequence) -> BTreeMap<ElementClass, usize> {
    let mut counts = BTreeMap::new();
    for &tok in seq.tokens() {
        let class = classify_token(tok);
        if class != ElementClass::NonScoring {
            *counts.entry(class).or_insert(0) += 1;
        }
    }
    counts
}

/// Unnormalized score: the i-th occurrence of class m contributes `gamma^(i-1) * w_m`,
/// summed in closed form `w_m (1 - gamma^N) / (1 - gamma)`.
pub fn drule_raw(seq: &TagSequence, cfg: &DRuleConfig) -> f64 {
    class_counts(seq)
        .into_iter()
        .map(|(class, n)| {
            let n = i32::try_from(n).unwrap_or(i32::MAX);
            cfg.weight(class) * (1.0 - cfg.gamma.powi(n)) / (1.0 - cfg.gamma)
        })
        .sum()
}

/// `min(1, raw(response) / raw(reference))`; 1 when the reference has no structure.
pub fn drule_score(
    response: &TagSequence,
    reference: &TagSequence,
    cfg: &DRuleConfig,
) -> Result<f64, DRuleConfigError> {
    cfg.validate()?;
    let raw_ref = drule_raw(reference, cfg);
    if raw_ref == 0.0 {
        return Ok(1.0);
    }
    Ok((drule_raw(response, cfg) / raw_ref).min(1.0))
}

/// Short stable digest of a serializable scoring configuration.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let canonical = serde_json::to_vec(config).expect("scoring configs serialize");
    let digest = Sha256::digest(&canonical);
    hex::encode(&digest[..8])
}

/// Configuration identity of the edit-distance metric.
pub fn mdeval_config_hash(mode: CompareMode) -> String {
    #[derive(Serialize)]
    struct Id<'a> {
        metric: &'a str,
        mode: CompareMode,
        vocabulary: &'a str,
    }
    config_hash(&Id {
        metric: "mdeval",
        mode,
        vocabulary: VOCABULARY_VERSION,
    })
}

pub fn drule_config_hash(cfg: &DRuleConfig) -> String {
    #[derive(Serialize)]
    struct Id<'a> {
        metric: &'a str,
        config: &'a DRuleConfig,
        vocabulary: &'a str,
    }
    config_hash(&Id {
        metric: "drule",
        config: cfg,
        vocabulary: VOCABULARY_VERSION,
    })
}
