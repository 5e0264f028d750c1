//! Commands that produce records: generate, rewrite, score.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use anyhow::{bail, Context, Result};
use futures::stream::{self, StreamExt};
use mdaware_core::corpus::{Metric, Phase, ResponseRecord, ScoreRecord, Store, TaskRecord};
use mdaware_core::md_structure::{htmlify_batch, MarkdownDoc};
use mdaware_core::par::Parallelism;
use mdaware_core::scoring::{
    class_counts, drule_config_hash, drule_raw, drule_score, ma_score_batch, mdeval_config_hash,
    CompareMode, DRuleConfig,
};
use mdaware_gateway::{
    judge_score_pllm, judge_score_rllm, load_judge, load_models, Endpoint, EndpointConfig,
    JudgePrompts, RewritePrompt,
};
use serde_json::json;

use crate::args::{GenerateArgs, RewriteArgs, ScoreArgs};
use crate::manifest::RunManifest;
use crate::run::{existing, retain, RunDir, Status};

type Key = (String, String);

fn key(r: &ResponseRecord) -> Key {
    (r.task_id.clone(), r.model.clone())
}

/// Copies new tasks into the run's task file; a task id that is already
/// there must describe the same task.
fn sync_tasks(run: &RunDir, source: &Path, tasks: &[TaskRecord]) -> Result<()> {
    let dest = run.tasks();
    let same_file = matches!(
        (std::fs::canonicalize(source), std::fs::canonicalize(&dest)),
        (Ok(a), Ok(b)) if a == b
    );
    if same_file {
        return Ok(());
    }
    let store = Store::<TaskRecord>::open(&dest);
    let existing: HashMap<String, TaskRecord> = existing(&store)?
        .into_iter()
        .map(|t| (t.task_id.clone(), t))
        .collect();
    let mut fresh = Vec::new();
    for t in tasks {
        match existing.get(&t.task_id) {
            Some(prev) if (&prev.prompt, prev.subject, prev.language) != (&t.prompt, t.subject, t.language) => {
                bail!(
                    "task `{}` in {} differs from the copy in {}",
                    t.task_id,
                    source.display(),
                    dest.display()
                )
            }
            Some(_) => {}
            None => fresh.push(t.clone()),
        }
    }
    store.append_all(&fresh)?;
    Ok(())
}

fn endpoints(configs: Vec<EndpointConfig>) -> Result<Vec<Endpoint>> {
    configs
        .into_iter()
        .map(|c| Endpoint::from_config(c).map_err(anyhow::Error::from))
        .collect()
}

pub async fn generate(a: &GenerateArgs) -> Result<Status> {
    let run = RunDir::new(&a.out.out);
    let tasks = mdaware_core::corpus::load_tasks(&a.tasks)?;
    let models = load_models(&a.models)?;

    let mut manifest = RunManifest::open(&run, a.seed)?;
    manifest.set_tasks_path(&a.tasks);
    manifest.merge_models(&models);
    manifest.save(&run)?;
    sync_tasks(&run, &a.tasks, &tasks)?;
    let eps = endpoints(models)?;

    let store = run.response_store();
    let wanted: HashSet<Key> = tasks
        .iter()
        .flat_map(|t| eps.iter().map(|e| (t.task_id.clone(), e.name().to_owned())))
        .collect();
    if a.force {
        let dropped = retain(&store, |r| !wanted.contains(&key(r)))?;
        let dropped_scores = retain(&run.score_store(), |s| !wanted.contains(&(s.task_id.clone(), s.model.clone())))?;
        tracing::info!(dropped, dropped_scores, "--force: cleared previous responses and scores");
    }
    let done: HashSet<Key> = existing(&store)?
        .iter()
        .filter(|r| r.phase == Phase::Generated)
        .map(key)
        .collect();

    let jobs: Vec<(&TaskRecord, &Endpoint)> = tasks
        .iter()
        .flat_map(|t| eps.iter().map(move |e| (t, e)))
        .filter(|(t, e)| !done.contains(&(t.task_id.clone(), e.name().to_owned())))
        .collect();
    let skipped = tasks.len() * eps.len() - jobs.len();
    let limit: usize = eps.iter().map(|e| e.config().max_concurrency).sum();

    let (mut new, mut failed, mut empty) = (0, 0, 0);
    // `buffered` keeps job order, so the file layout does not depend on timing
    let mut results = stream::iter(jobs.into_iter().map(|(t, e)| mdaware_gateway::generate(t, e))).buffered(limit.max(1));
    while let Some(res) = results.next().await {
        match res {
            Ok(r) => {
                empty += usize::from(r.meta.empty);
                store.append(&r)?;
                new += 1;
            }
            Err(e) => {
                tracing::error!("{e}");
                failed += 1;
            }
        }
    }
    println!("generate: {new} new, {skipped} already present, {failed} failed, {empty} empty");
    Ok(Status::from_problems(failed))
}

/// The judge for this run: `--judge` if given (checked against the
/// manifest), else the one the manifest already records.
fn resolve_judge(manifest: &mut RunManifest, path: Option<&Path>, run: &RunDir) -> Result<EndpointConfig> {
    match path {
        Some(p) => {
            let judge = load_judge(p)?;
            manifest.set_judge(&judge)?;
            Ok(judge)
        }
        None => manifest.judge.clone().with_context(|| {
            format!("no judge recorded in {}; pass --judge <file>", run.manifest().display())
        }),
    }
}

pub async fn rewrite(a: &RewriteArgs) -> Result<Status> {
    let run = RunDir::new(&a.out.out);
    let generated = run.require_responses(Phase::Generated)?;
    let prompt = match &a.template {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            RewritePrompt::new(text)?
        }
        None => RewritePrompt::default(),
    };
    let mut manifest = RunManifest::open(&run, 0)?;
    let judge_cfg = resolve_judge(&mut manifest, a.judge.as_deref(), &run)?;
    manifest.set_rewrite_template(&prompt.hash())?;
    manifest.save(&run)?;
    let judge = Endpoint::from_config(judge_cfg)?;

    let store = run.response_store();
    if a.force {
        let dropped = retain(&store, |r| r.phase != Phase::Rewritten)?;
        let dropped_scores = retain(&run.score_store(), |s| s.metric == Metric::Pllm)?;
        tracing::info!(dropped, dropped_scores, "--force: cleared previous rewrites and dependent scores");
    }
    let done: HashSet<Key> = existing(&store)?
        .iter()
        .filter(|r| r.phase == Phase::Rewritten)
        .map(key)
        .collect();
    let jobs: Vec<&ResponseRecord> = generated.iter().filter(|r| !done.contains(&key(r))).collect();
    let skipped = generated.len() - jobs.len();

    let (mut new, mut failed, mut drift) = (0, 0, 0);
    let limit = judge.config().max_concurrency;
    let mut results = stream::iter(jobs.into_iter().map(|r| mdaware_gateway::rewrite(r, &judge, &prompt))).buffered(limit);
    while let Some(res) = results.next().await {
        match res {
            Ok(r) => {
                drift += usize::from(r.meta.drift_warning);
                store.append(&r)?;
                new += 1;
            }
            Err(e) => {
                tracing::error!("{e}");
                failed += 1;
            }
        }
    }
    println!("rewrite: {new} new, {skipped} already present, {failed} failed, {drift} drift warnings");
    Ok(Status::from_problems(failed))
}

struct Tally {
    new: usize,
    skipped: usize,
    /// Generated answers without a rewrite to compare against.
    unpaired: usize,
    failed: usize,
    invalid: usize,
}

pub async fn score(a: &ScoreArgs) -> Result<Status> {
    let run = RunDir::new(&a.out.out);
    let metrics: Vec<Metric> = a
        .metrics
        .iter()
        .map(|&m| Metric::from(m))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let generated = run.require_responses(Phase::Generated)?;
    let needs_reference = metrics.iter().any(|m| *m != Metric::Pllm);
    let rewritten = if needs_reference {
        run.require_responses(Phase::Rewritten)?
    } else {
        Vec::new()
    };
    let needs_judge = metrics.iter().any(|m| matches!(m, Metric::Pllm | Metric::Rllm));

    let mut manifest = RunManifest::open(&run, 0)?;
    let judge = if needs_judge {
        Some(resolve_judge(&mut manifest, a.judge.as_deref(), &run)?)
    } else {
        None
    };
    manifest.add_metrics(&metrics);
    manifest.save(&run)?;

    let store = run.score_store();
    if a.force {
        let dropped = retain(&store, |s| !metrics.contains(&s.metric))?;
        tracing::info!(dropped, "--force: cleared previous scores");
    }
    let existing = existing(&store)?;

    let generated: BTreeMap<Key, ResponseRecord> = generated.into_iter().map(|r| (key(&r), r)).collect();
    let rewritten: BTreeMap<Key, ResponseRecord> = rewritten.into_iter().map(|r| (key(&r), r)).collect();
    let mode = if a.char_level { CompareMode::Char } else { CompareMode::Token };
    let drule_cfg = match &a.drule_config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            let cfg: DRuleConfig = serde_json::from_str(&text).with_context(|| format!("bad D-Rule config {}", p.display()))?;
            cfg.validate()?;
            cfg
        }
        None => DRuleConfig::default(),
    };

    let mut problems = 0;
    for metric in metrics {
        let done: HashSet<Key> = existing
            .iter()
            .filter(|s| s.metric == metric)
            .map(|s| (s.task_id.clone(), s.model.clone()))
            .collect();
        let expected_hash = match metric {
            Metric::Mdeval => Some(mdeval_config_hash(mode)),
            Metric::Drule => Some(drule_config_hash(&drule_cfg)),
            _ => None,
        };
        if let Some(h) = &expected_hash {
            let stale = existing
                .iter()
                .filter(|s| s.metric == metric && &s.config_hash != h)
                .count();
            if stale > 0 {
                tracing::warn!(%metric, stale, "stored scores use a different configuration; rerun with --force to replace them");
            }
        }
        let todo: Vec<&ResponseRecord> = generated
            .iter()
            .filter(|(k, _)| !done.contains(*k))
            .map(|(_, r)| r)
            .collect();
        let skipped = generated.len() - todo.len();
        let tally = match metric {
            Metric::Mdeval | Metric::Drule => {
                let (records, unpaired) =
                    offline_scores(metric, &todo, &rewritten, mode, &drule_cfg)?;
                store.append_all(&records)?;
                Tally {
                    new: records.len(),
                    skipped,
                    unpaired,
                    failed: 0,
                    invalid: 0,
                }
            }
            Metric::Pllm | Metric::Rllm => {
                let judge = Endpoint::from_config(judge.clone().expect("resolved above"))?;
                judge_scores(metric, &todo, &rewritten, &judge, &store, skipped).await?
            }
        };
        if tally.unpaired > 0 {
            tracing::warn!(%metric, n = tally.unpaired, "generated answers without a rewrite were not scored; run `mdaware rewrite`");
        }
        println!(
            "score {metric}: {} new, {} already present, {} without reference, {} failed, {} invalid",
            tally.new, tally.skipped, tally.unpaired, tally.failed, tally.invalid
        );
        problems += tally.unpaired + tally.failed + tally.invalid;
    }
    Ok(Status::from_problems(problems))
}

fn offline_scores(
    metric: Metric,
    todo: &[&ResponseRecord],
    rewritten: &BTreeMap<Key, ResponseRecord>,
    mode: CompareMode,
    drule_cfg: &DRuleConfig,
) -> Result<(Vec<ScoreRecord>, usize)> {
    let paired: Vec<(&ResponseRecord, &ResponseRecord)> = todo
        .iter()
        .filter_map(|r| rewritten.get(&key(r)).map(|f| (*r, f)))
        .collect();
    let unpaired = todo.len() - paired.len();
    let par = Parallelism::Parallel;
    let responses = htmlify_batch(&paired.iter().map(|(r, _)| MarkdownDoc::new(r.text.as_str())).collect::<Vec<_>>(), par);
    let references = htmlify_batch(&paired.iter().map(|(_, f)| MarkdownDoc::new(f.text.as_str())).collect::<Vec<_>>(), par);

    let records = match metric {
        Metric::Mdeval => {
            let pairs: Vec<_> = responses.into_iter().zip(references).collect();
            let hash = mdeval_config_hash(mode);
            ma_score_batch(&pairs, mode, par)
                .into_iter()
                .zip(&paired)
                .map(|(s, (r, _))| ScoreRecord {
                    task_id: r.task_id.clone(),
                    model: r.model.clone(),
                    metric,
                    value: s.value,
                    detail: json!({
                        "distance": s.distance,
                        "len_response": s.len_r,
                        "len_reference": s.len_ref,
                        "mode": mode,
                    }),
                    config_hash: hash.clone(),
                    invalid: false,
                    extra: Default::default(),
                })
                .collect()
        }
        Metric::Drule => {
            let hash = drule_config_hash(drule_cfg);
            let counts = |seq| -> BTreeMap<String, usize> {
                class_counts(seq).into_iter().map(|(c, n)| (c.key(), n)).collect()
            };
            responses
                .iter()
                .zip(&references)
                .zip(&paired)
                .map(|((resp, refr), (r, _))| {
                    Ok(ScoreRecord {
                        task_id: r.task_id.clone(),
                        model: r.model.clone(),
                        metric,
                        value: drule_score(resp, refr, drule_cfg)?,
                        detail: json!({
                            "raw_response": drule_raw(resp, drule_cfg),
                            "raw_reference": drule_raw(refr, drule_cfg),
                            "counts_response": counts(resp),
                            "counts_reference": counts(refr),
                        }),
                        config_hash: hash.clone(),
                        invalid: false,
                        extra: Default::default(),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        _ => unreachable!("judge metrics are scored online"),
    };
    Ok((records, unpaired))
}

async fn judge_scores(
    metric: Metric,
    todo: &[&ResponseRecord],
    rewritten: &BTreeMap<Key, ResponseRecord>,
    judge: &Endpoint,
    store: &Store<ScoreRecord>,
    skipped: usize,
) -> Result<Tally> {
    let prompts = JudgePrompts::default();
    let mut unpaired = 0;
    let jobs: Vec<(&ResponseRecord, Option<&ResponseRecord>)> = todo
        .iter()
        .filter_map(|r| match metric {
            Metric::Rllm => match rewritten.get(&key(r)) {
                Some(f) => Some((*r, Some(f))),
                None => {
                    unpaired += 1;
                    None
                }
            },
            _ => Some((*r, None)),
        })
        .collect();
    let prompts = &prompts;
    let mut results = stream::iter(jobs.into_iter().map(|(r, f)| async move {
        match metric {
            Metric::Rllm => judge_score_rllm(r, f, judge, prompts).await,
            _ => judge_score_pllm(r, judge, prompts).await,
        }
    }))
    .buffered(judge.config().max_concurrency);
    let mut tally = Tally {
        new: 0,
        skipped,
        unpaired,
        failed: 0,
        invalid: 0,
    };
    while let Some(res) = results.next().await {
        match res {
            Ok(s) => {
                tally.invalid += usize::from(s.invalid);
                store.append(&s)?;
                tally.new += 1;
            }
            Err(e) => {
                tracing::error!("{e}");
                tally.failed += 1;
            }
        }
    }
    Ok(tally)
}
