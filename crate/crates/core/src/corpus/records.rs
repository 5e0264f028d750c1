use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ratings::VoteRecord;

/// Topic of a benchmark task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    BusinessAndEconomics,
    SocialSciencesAndHumanRights,
    EnvironmentAndSustainability,
    ScienceAndTechnology,
    LawLegalStudiesAndInternationalRelations,
    HistoryGeographyAndCulturalStudies,
    EducationAndLearning,
    HealthWellnessAndFitness,
    MoralsAndEthics,
    PsychologyAndBehavioralSciences,
}

impl Subject {
    pub const ALL: [Subject; 10] = [
        Subject::BusinessAndEconomics,
        Subject::SocialSciencesAndHumanRights,
        Subject::EnvironmentAndSustainability,
        Subject::ScienceAndTechnology,
        Subject::LawLegalStudiesAndInternationalRelations,
        Subject::HistoryGeographyAndCulturalStudies,
        Subject::EducationAndLearning,
        Subject::HealthWellnessAndFitness,
        Subject::MoralsAndEthics,
        Subject::PsychologyAndBehavioralSciences,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Subject::BusinessAndEconomics => "business_and_economics",
            Subject::SocialSciencesAndHumanRights => "social_sciences_and_human_rights",
            Subject::EnvironmentAndSustainability => "environment_and_sustainability",
            Subject::ScienceAndTechnology => "science_and_technology",
            Subject::LawLegalStudiesAndInternationalRelations => {
                "law_legal_studies_and_international_relations"
            }
            Subject::HistoryGeographyAndCulturalStudies => "history_geography_and_cultural_studies",
            Subject::EducationAndLearning => "education_and_learning",
            Subject::HealthWellnessAndFitness => "health_wellness_and_fitness",
            Subject::MoralsAndEthics => "morals_and_ethics",
            Subject::PsychologyAndBehavioralSciences => "psychology_and_behavioral_sciences",
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Zh,
}

impl Language {
    pub fn label(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Zh => "zh",
        }
    }
}

/// One benchmark prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub prompt: String,
    pub subject: Subject,
    pub language: Language,
    /// Unknown fields; kept when reading, never written back.
    #[serde(flatten, skip_serializing)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Generated,
    Rewritten,
}

/// Gateway bookkeeping attached to a stored response.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResponseMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
    #[serde(default)]
    pub retries: u32,
    /// The endpoint returned an empty completion.
    #[serde(default)]
    pub empty: bool,
    /// Rewrite changed the alphanumeric character count by more than the drift threshold.
    #[serde(default)]
    pub drift_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub task_id: String,
    pub model: String,
    pub phase: Phase,
    pub text: String,
    /// Set iff `phase` is `rewritten`.
    #[serde(default)]
    pub judge: Option<String>,
    /// Milliseconds since the epoch.
    pub created_at: i64,
    #[serde(default)]
    pub meta: ResponseMeta,
    #[serde(flatten, skip_serializing)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mdeval,
    Drule,
    Pllm,
    Rllm,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Mdeval, Metric::Drule, Metric::Pllm, Metric::Rllm];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Mdeval => "mdeval",
            Metric::Drule => "drule",
            Metric::Pllm => "pllm",
            Metric::Rllm => "rllm",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub task_id: String,
    pub model: String,
    pub metric: Metric,
    pub value: f64,
    /// Metric-specific audit fields.
    #[serde(default)]
    pub detail: Value,
    pub config_hash: String,
    /// The judge produced no usable number; excluded from aggregates.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub invalid: bool,
    #[serde(flatten, skip_serializing)]
    pub extra: BTreeMap<String, Value>,
}

/// Fields a store scan can filter on.
pub trait Keyed {
    fn task_id(&self) -> &str;
    fn involves_model(&self, model: &str) -> bool;
    fn phase(&self) -> Option<Phase> {
        None
    }
    fn metric(&self) -> Option<Metric> {
        None
    }
}

impl Keyed for TaskRecord {
    fn task_id(&self) -> &str {
        &self.task_id
    }
    fn involves_model(&self, _model: &str) -> bool {
        false
    }
}

impl Keyed for ResponseRecord {
    fn task_id(&self) -> &str {
        &self.task_id
    }
    fn involves_model(&self, model: &str) -> bool {
        self.model == model
    }
    fn phase(&self) -> Option<Phase> {
        Some(self.phase)
    }
}

impl Keyed for ScoreRecord {
    fn task_id(&self) -> &str {
        &self.task_id
    }
    fn involves_model(&self, model: &str) -> bool {
        self.model == model
    }
    fn metric(&self) -> Option<Metric> {
        Some(self.metric)
    }
}

impl Keyed for VoteRecord {
    fn task_id(&self) -> &str {
        &self.task_id
    }
    fn involves_model(&self, model: &str) -> bool {
        self.model_i == model || self.model_j == model
    }
}

/// Conjunctive scan filter; `None` fields match everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordFilter {
    pub task_id: Option<String>,
    pub model: Option<String>,
    pub phase: Option<Phase>,
    pub metric: Option<Metric>,
}

impl RecordFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn task(mut self, task_id: impl Into<String>) -> Self {
        self.task_id = Some(task_id.into());
        self
    }

    pub fn model(mut self, model: impl Into<String>) -> Self {
        self.model = Some(model.into());
        self
    }

    pub fn phase(mut self, phase: Phase) -> Self {
        self.phase = Some(phase);
        self
    }

    pub fn metric(mut self, metric: Metric) -> Self {
        self.metric = Some(metric);
        self
    }

    pub fn matches<T: Keyed>(&self, r: &T) -> bool {
        self.task_id.as_deref().is_none_or(|t| r.task_id() == t)
            && self.model.as_deref().is_none_or(|m| r.involves_model(m))
            && self.phase.is_none_or(|p| r.phase() == Some(p))
            && self.metric.is_none_or(|m| r.metric() == Some(m))
    }
}
