use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use mdaware_core::corpus::{
    load_tasks, Phase, RecordFilter, ResponseRecord, Store, RESPONSES_FILE, TASKS_FILE,
};

use crate::VoteError;

/// One task that can be served: at least two models answered it.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogTask {
    pub task_id: String,
    pub prompt: Option<String>,
    /// (model, generated text), sorted by model.
    pub responses: Vec<(String, String)>,
}

/// Generated responses available for voting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    pub tasks: Vec<CatalogTask>,
    /// Every model with at least one generated response, servable or not.
    pub models: Vec<String>,
}

impl Catalog {
    /// Builds the catalog from generated responses. Tasks answered by fewer
    /// than two models are dropped; a repeated (task, model) keeps the first.
    pub fn from_responses(
        responses: impl IntoIterator<Item = ResponseRecord>,
        prompts: &BTreeMap<String, String>,
    ) -> Self {
        let mut by_task: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut models = BTreeSet::new();
        for r in responses {
            if r.phase != Phase::Generated {
                continue;
            }
            models.insert(r.model.clone());
            by_task.entry(r.task_id).or_default().entry(r.model).or_insert(r.text);
        }
        let tasks = by_task
            .into_iter()
            .filter(|(_, m)| m.len() >= 2)
            .map(|(task_id, m)| CatalogTask {
                prompt: prompts.get(&task_id).cloned(),
                task_id,
                responses: m.into_iter().collect(),
            })
            .collect();
        Catalog {
            tasks,
            models: models.into_iter().collect(),
        }
    }

    /// Reads `responses.jsonl` from a run directory, plus prompts from
    /// `tasks.jsonl` when that file is present.
    pub fn load(dir: &Path) -> Result<Self, VoteError> {
        let path = dir.join(RESPONSES_FILE);
        if !path.exists() {
            return Err(VoteError::MissingResponses(path));
        }
        let responses = Store::<ResponseRecord>::open(&path)
            .scan(&RecordFilter::all().phase(Phase::Generated))
            .map_err(|e| VoteError::Load(e.to_string()))?;
        let tasks_path = dir.join(TASKS_FILE);
        let prompts = if tasks_path.exists() {
            load_tasks(&tasks_path)
                .map_err(|e| VoteError::Load(e.to_string()))?
                .into_iter()
                .map(|t| (t.task_id, t.prompt))
                .collect()
        } else {
            BTreeMap::new()
        };
        Ok(Self::from_responses(responses, &prompts))
    }

    pub fn is_servable(&self) -> bool {
        !self.tasks.is_empty()
    }
}
