//! Per-run manifest, written before any network call.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mdaware_core::corpus::{now_millis, Metric};
use mdaware_gateway::EndpointConfig;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::run::RunDir;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub created_at: i64,
    pub updated_at: i64,
    #[serde(default)]
    pub tasks_path: Option<PathBuf>,
    #[serde(default)]
    pub models: Vec<EndpointConfig>,
    /// The one judge of this run; rewriting and judge scoring must agree on it.
    #[serde(default)]
    pub judge: Option<EndpointConfig>,
    #[serde(default)]
    pub rewrite_template_hash: Option<String>,
    #[serde(default)]
    pub metrics: Vec<Metric>,
    pub out: PathBuf,
    pub seed: u64,
}

impl RunManifest {
    /// Loads the run's manifest, or starts one with a fresh run id.
    pub fn open(run: &RunDir, seed: u64) -> Result<Self> {
        let path = run.manifest();
        if path.exists() {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            return serde_json::from_str(&text)
                .with_context(|| format!("{} is not a valid manifest", path.display()));
        }
        let now = now_millis();
        let suffix: u32 = rand::rng().random();
        Ok(RunManifest {
            run_id: format!("run-{now}-{suffix:08x}"),
            created_at: now,
            updated_at: now,
            tasks_path: None,
            models: Vec::new(),
            judge: None,
            rewrite_template_hash: None,
            metrics: Vec::new(),
            out: run.root().to_path_buf(),
            seed,
        })
    }

    pub fn save(&mut self, run: &RunDir) -> Result<()> {
        self.updated_at = now_millis();
        std::fs::create_dir_all(run.root())
            .with_context(|| format!("cannot create {}", run.root().display()))?;
        let path = run.manifest();
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("cannot write {}", tmp.display()))?;
        std::fs::rename(&tmp, &path).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }

    pub fn set_tasks_path(&mut self, path: &Path) {
        self.tasks_path = Some(std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf()));
    }

    /// Adds new models; a model already listed is replaced by its new config.
    pub fn merge_models(&mut self, models: &[EndpointConfig]) {
        for m in models {
            match self.models.iter_mut().find(|x| x.name == m.name) {
                Some(slot) => *slot = m.clone(),
                None => self.models.push(m.clone()),
            }
        }
    }

    /// Records the judge, refusing a different one than the run already used.
    pub fn set_judge(&mut self, judge: &EndpointConfig) -> Result<()> {
        if let Some(prev) = &self.judge {
            if !same_judge(prev, judge) {
                bail!(
                    "run already uses judge `{}` ({}); a run has exactly one judge, use a new --out directory for `{}`",
                    prev.name,
                    prev.wire_model(),
                    judge.name
                );
            }
        }
        self.judge = Some(judge.clone());
        Ok(())
    }

    pub fn set_rewrite_template(&mut self, hash: &str) -> Result<()> {
        if let Some(prev) = &self.rewrite_template_hash {
            if prev != hash {
                bail!("run was rewritten with template {prev}, not {hash}; a run has exactly one rewrite prompt");
            }
        }
        self.rewrite_template_hash = Some(hash.to_owned());
        Ok(())
    }

    pub fn add_metrics(&mut self, metrics: &[Metric]) {
        for m in metrics {
            if !self.metrics.contains(m) {
                self.metrics.push(*m);
            }
        }
        self.metrics.sort();
    }
}

// Retry and concurrency settings may change between invocations; identity may not.
fn same_judge(a: &EndpointConfig, b: &EndpointConfig) -> bool {
    a.name == b.name
        && a.wire_model() == b.wire_model()
        && a.base_url == b.base_url
        && a.temperature == b.temperature
        && a.mock == b.mock
}
