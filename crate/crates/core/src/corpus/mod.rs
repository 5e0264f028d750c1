//! Records, their JSON-lines files, and score aggregation.
//!
//! A run directory holds `tasks.jsonl`, `responses.jsonl`, `scores.jsonl` and
//! `votes.jsonl`, one record per line.

mod records;
mod store;

pub use records::{
    Keyed, Language, Metric, Phase, RecordFilter, ResponseMeta, ResponseRecord, ScoreRecord,
    Subject, TaskRecord,
};
pub use store::{Store, StoreError};

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TASKS_FILE: &str = "tasks.jsonl";
pub const RESPONSES_FILE: &str = "responses.jsonl";
pub const SCORES_FILE: &str = "scores.jsonl";
pub const VOTES_FILE: &str = "votes.jsonl";

/// Milliseconds since the Unix epoch.
pub fn now_millis() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum TaskLoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{} invalid task line(s): {}", .0.len(), .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<LineError>),
}

/// Loads and validates a task file. Every bad line is reported, not just the first.
pub fn load_tasks(path: impl AsRef<Path>) -> Result<Vec<TaskRecord>, TaskLoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| TaskLoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_tasks(&text)
}

pub fn parse_tasks(text: &str) -> Result<Vec<TaskRecord>, TaskLoadError> {
    let mut tasks = Vec::new();
    let mut errors = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let task: TaskRecord = match serde_json::from_str(raw) {
            Ok(t) => t,
            Err(e) => {
                errors.push(LineError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if task.task_id.trim().is_empty() {
            errors.push(LineError {
                line,
                message: "empty task_id".into(),
            });
            continue;
        }
        if task.prompt.trim().is_empty() {
            errors.push(LineError {
                line,
                message: format!("task `{}` has an empty prompt", task.task_id),
            });
            continue;
        }
        if let Some(first) = seen.insert(task.task_id.clone(), line) {
            errors.push(LineError {
                line,
                message: format!("duplicate task_id `{}` on lines {first} and {line}", task.task_id),
            });
            continue;
        }
        tasks.push(task);
    }
    if errors.is_empty() {
        Ok(tasks)
    } else {
        Err(TaskLoadError::Invalid(errors))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    #[default]
    Model,
    Subject,
    Language,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMean {
    pub model: String,
    /// Subject or language label; absent when grouping by model only.
    pub group: Option<String>,
    pub mean: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedMeans {
    /// Ordered by model, then group.
    pub rows: Vec<GroupMean>,
    /// Records flagged invalid and left out.
    pub invalid_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregateError {
    #[error("no valid scores to aggregate")]
    Empty,
    #[error("score for task `{0}` has no matching task record")]
    UnknownTask(String),
}

/// Arithmetic mean of valid scores per model, optionally split by subject or language.
pub fn mean_scores(
    scores: &[ScoreRecord],
    tasks: &[TaskRecord],
    group_by: GroupBy,
) -> Result<GroupedMeans, AggregateError> {
    let by_id: HashMap<&str, &TaskRecord> = tasks.iter().map(|t| (t.task_id.as_str(), t)).collect();
    let mut acc: BTreeMap<(String, Option<String>), (f64, usize)> = BTreeMap::new();
    let mut invalid_excluded = 0;
    for s in scores {
        if s.invalid {
            invalid_excluded += 1;
            continue;
        }
        let group = match group_by {
            GroupBy::Model => None,
            GroupBy::Subject | GroupBy::Language => {
                let task = by_id
                    .get(s.task_id.as_str())
                    .ok_or_else(|| AggregateError::UnknownTask(s.task_id.clone()))?;
                Some(match group_by {
                    GroupBy::Subject => task.subject.label().to_owned(),
                    _ => task.language.label().to_owned(),
                })
            }
        };
        let e = acc.entry((s.model.clone(), group)).or_insert((0.0, 0));
        e.0 += s.value;
        e.1 += 1;
    }
    if acc.is_empty() {
        return Err(AggregateError::Empty);
    }
    let rows = acc
        .into_iter()
        .map(|((model, group), (sum, n))| GroupMean {
            model,
            group,
            mean: sum / n as f64,
            n,
        })
        .collect();
    Ok(GroupedMeans {
        rows,
        invalid_excluded,
    })
}

/// Model-level means sorted descending, model name breaking ties.
pub fn rank_by_mean(scores: &[ScoreRecord]) -> Result<Vec<GroupMean>, AggregateError> {
    let mut rows = mean_scores(scores, &[], GroupBy::Model)?.rows;
    rows.sort_by(|a, b| b.mean.total_cmp(&a.mean).then_with(|| a.model.cmp(&b.model)));
    Ok(rows)
}

/// Valid scores arranged as task → model → value.
pub fn scores_by_task(scores: &[ScoreRecord]) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for s in scores.iter().filter(|s| !s.invalid) {
        out.entry(s.task_id.clone())
            .or_default()
            .insert(s.model.clone(), s.value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task_line(id: &str, prompt: &str) -> String {
        format!(
            r#"{{"task_id":"{id}","prompt":"{prompt}","subject":"morals_and_ethics","language":"en"}}"#
        )
    }

    fn score(task: &str, model: &str, value: f64) -> ScoreRecord {
        ScoreRecord {
            task_id: task.into(),
            model: model.into(),
            metric: Metric::Mdeval,
            value,
            detail: serde_json::Value::Null,
            config_hash: "h".into(),
            invalid: false,
            extra: Default::default(),
        }
    }

    #[test]
    fn three_valid_lines() {
        let text = ["a", "b", "c"].map(|id| task_line(id, "Why?")).join("\n");
        let tasks = parse_tasks(&text).unwrap();
        assert_eq!(tasks.iter().map(|t| t.task_id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
    }

    #[test]
    fn missing_prompt_rejected_with_line() {
        let text = format!(
            "{}\n{}\n",
            task_line("a", "Why?"),
            r#"{"task_id":"b","subject":"morals_and_ethics","language":"zh"}"#
        );
        match parse_tasks(&text) {
            Err(TaskLoadError::Invalid(errs)) => {
                assert_eq!(errs.len(), 1);
                assert_eq!(errs[0].line, 2);
                assert!(errs[0].message.contains("prompt"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_name_both_lines() {
        let lines = [
            task_line("a", "p"),
            task_line("x", "p"),
            task_line("b", "p"),
            task_line("c", "p"),
            task_line("x", "p"),
        ];
        match parse_tasks(&lines.join("\n")) {
            Err(TaskLoadError::Invalid(errs)) => {
                assert_eq!(errs[0].message, "duplicate task_id `x` on lines 2 and 5");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_subject_and_language_rejected() {
        let text = r#"{"task_id":"a","prompt":"p","subject":"astrology","language":"en"}
{"task_id":"b","prompt":"p","subject":"morals_and_ethics","language":"fr"}"#;
        match parse_tasks(text) {
            Err(TaskLoadError::Invalid(errs)) => assert_eq!(errs.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_read_but_not_written() {
        let text = r#"{"task_id":"a","prompt":"p","subject":"morals_and_ethics","language":"en","source":"wiki"}"#;
        let t = &parse_tasks(text).unwrap()[0];
        assert_eq!(t.extra["source"], "wiki");
        assert!(!serde_json::to_string(t).unwrap().contains("wiki"));
    }

    #[test]
    fn two_point_mean() {
        let m = mean_scores(&[score("t1", "m", 0.8), score("t2", "m", 0.9)], &[], GroupBy::Model).unwrap();
        assert_eq!(m.rows.len(), 1);
        assert!((m.rows[0].mean - 0.85).abs() < 1e-12);
        assert_eq!(m.rows[0].n, 2);
    }

    #[test]
    fn invalid_scores_excluded() {
        let mut bad = score("t1", "m", 0.0);
        bad.invalid = true;
        let m = mean_scores(&[bad, score("t2", "m", 0.6)], &[], GroupBy::Model).unwrap();
        assert_eq!(m.invalid_excluded, 1);
        assert_eq!(m.rows[0].mean, 0.6);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(mean_scores(&[], &[], GroupBy::Model).unwrap_err(), AggregateError::Empty);
    }

    #[test]
    fn grouping_needs_task_records() {
        assert_eq!(
            mean_scores(&[score("t1", "m", 0.5)], &[], GroupBy::Language).unwrap_err(),
            AggregateError::UnknownTask("t1".into())
        );
    }

    #[test]
    fn rank_by_mean_breaks_ties_by_name() {
        let r = rank_by_mean(&[score("t", "b", 0.5), score("t", "a", 0.5), score("t", "c", 0.9)]).unwrap();
        assert_eq!(r.iter().map(|g| g.model.as_str()).collect::<Vec<_>>(), ["c", "a", "b"]);
    }
}
