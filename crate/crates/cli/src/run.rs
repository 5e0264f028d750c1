use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use mdaware_core::corpus::{
    Keyed, Metric, Phase, RecordFilter, ResponseRecord, ScoreRecord, Store, TaskRecord, RESPONSES_FILE,
    SCORES_FILE, TASKS_FILE, VOTES_FILE,
};
use mdaware_core::ratings::VoteRecord;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORTS_DIR: &str = "reports";

/// Outcome of a command that did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    /// Some items were skipped or failed; details are in the log.
    Partial,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Complete => 0,
            Status::Partial => 2,
        }
    }

    pub fn from_problems(n: usize) -> Self {
        if n == 0 {
            Status::Complete
        } else {
            Status::Partial
        }
    }
}

/// Error for an upstream file a command cannot run without.
pub fn missing(path: &Path, what: &str, command: &str) -> anyhow::Error {
    anyhow!("missing {what}: {} (produce it with `{command}`)", path.display())
}

/// Stored records; a store that was never written reads as empty, quietly.
pub fn existing<T: Serialize + DeserializeOwned + Keyed>(store: &Store<T>) -> Result<Vec<T>> {
    if !store.exists() {
        return Ok(Vec::new());
    }
    Ok(store.read_all()?)
}

/// Like [`Store::retain`], but a missing store has nothing to drop.
pub fn retain<T: Serialize + DeserializeOwned + Keyed>(store: &Store<T>, keep: impl Fn(&T) -> bool) -> Result<usize> {
    if !store.exists() {
        return Ok(0);
    }
    Ok(store.retain(keep)?)
}

/// Paths inside one run directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: &Path) -> Self {
        RunDir {
            root: root.to_path_buf(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn tasks(&self) -> PathBuf {
        self.root.join(TASKS_FILE)
    }

    pub fn responses(&self) -> PathBuf {
        self.root.join(RESPONSES_FILE)
    }

    pub fn scores(&self) -> PathBuf {
        self.root.join(SCORES_FILE)
    }

    pub fn votes(&self) -> PathBuf {
        self.root.join(VOTES_FILE)
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    pub fn report_file(&self, name: &str) -> Result<PathBuf> {
        let dir = self.root.join(REPORTS_DIR);
        std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(dir.join(name))
    }

    pub fn response_store(&self) -> Store<ResponseRecord> {
        Store::open(self.responses())
    }

    pub fn score_store(&self) -> Store<ScoreRecord> {
        Store::open(self.scores())
    }

    /// Responses of one phase; fatal when there are none.
    pub fn require_responses(&self, phase: Phase) -> Result<Vec<ResponseRecord>> {
        let path = self.responses();
        let (what, command) = match phase {
            Phase::Generated => ("generated responses", "mdaware generate"),
            Phase::Rewritten => ("rewritten responses", "mdaware rewrite"),
        };
        if !path.exists() {
            return Err(missing(&path, what, command));
        }
        let records = self.response_store().scan(&RecordFilter::all().phase(phase))?;
        if records.is_empty() {
            return Err(missing(&path, what, command));
        }
        Ok(records)
    }

    /// Scores for one metric; fatal when there are none.
    pub fn require_scores(&self, metric: Metric) -> Result<Vec<ScoreRecord>> {
        let path = self.scores();
        let command = format!("mdaware score --metric {metric}");
        let what = format!("{metric} scores");
        if !path.exists() {
            return Err(missing(&path, &what, &command));
        }
        let records = self.score_store().scan(&RecordFilter::all().metric(metric))?;
        if records.is_empty() {
            return Err(missing(&path, &what, &command));
        }
        Ok(records)
    }

    /// Metrics with at least one stored score, in canonical order.
    pub fn scored_metrics(&self) -> Result<Vec<Metric>> {
        let all = existing(&self.score_store())?;
        Ok(Metric::ALL
            .into_iter()
            .filter(|m| all.iter().any(|s| s.metric == *m))
            .collect())
    }

    pub fn load_tasks(&self, explicit: Option<&Path>) -> Result<Vec<TaskRecord>> {
        let path = explicit.map(Path::to_path_buf).unwrap_or_else(|| self.tasks());
        if !path.exists() {
            return Err(missing(&path, "task file", "mdaware generate --tasks <file>"));
        }
        Ok(mdaware_core::corpus::load_tasks(&path)?)
    }

    pub fn load_votes(&self, explicit: Option<&Path>) -> Result<(PathBuf, Vec<VoteRecord>)> {
        let path = explicit.map(Path::to_path_buf).unwrap_or_else(|| self.votes());
        if !path.exists() {
            return Err(missing(&path, "vote log", "mdaware serve --responses-dir <run>"));
        }
        let votes = Store::<VoteRecord>::open(&path).read_all()?;
        if votes.is_empty() {
            return Err(anyhow!("vote log {} has no votes yet", path.display()));
        }
        Ok((path, votes))
    }
}
