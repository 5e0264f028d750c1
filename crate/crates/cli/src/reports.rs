//! Commands that read records and print tables: rank, elo, align, report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use anyhow::{bail, Result};
use mdaware_core::alignment::{alignment_report, AlignmentOptions, AlignmentReport, ScoreLookup};
use mdaware_core::corpus::{mean_scores, rank_by_mean, scores_by_task, GroupBy, GroupMean, Metric, ScoreRecord, TaskRecord};
use mdaware_core::par::Parallelism;
use mdaware_core::ratings::{bootstrap_ratings, gpa_ranking, vote_stats, EloConfig, GpaRanking, RatingTable, VoteRecord};
use serde::Serialize;
use serde_json::json;

use crate::args::{AlignArgs, EloArgs, RankArgs, RankMethod, ReportArgs, VoteArgs};
use crate::run::{RunDir, Status};

fn width(names: impl Iterator<Item = usize>) -> usize {
    names.max().unwrap_or(0).max("model".len())
}

/// Mean-score ranking, best first.
pub fn mean_table(metric: Metric, rows: &[GroupMean], invalid: usize) -> String {
    let w = width(rows.iter().map(|r| r.model.chars().count()));
    let mut out = String::new();
    let _ = writeln!(out, "{:>4}  {:<w$}  {:>8}  {:>6}", "rank", "model", metric.as_str(), "n");
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(out, "{:>4}  {:<w$}  {:>8.3}  {:>6}", i + 1, r.model, r.mean, r.n);
    }
    if invalid > 0 {
        let _ = writeln!(out, "({invalid} invalid score(s) excluded)");
    }
    out
}

pub fn gpa_table(g: &GpaRanking) -> String {
    let w = width(g.rows.iter().map(|r| r.model.chars().count()));
    let mut out = String::new();
    let _ = writeln!(out, "{:>4}  {:<w$}  {:>7}  {:>6}", "rank", "model", "gpa", "tasks");
    for (i, r) in g.rows.iter().enumerate() {
        let _ = writeln!(out, "{:>4}  {:<w$}  {:>7.3}  {:>6}", i + 1, r.model, r.average, r.tasks);
    }
    if g.skipped_tasks > 0 {
        let _ = writeln!(out, "({} task(s) with a single model skipped)", g.skipped_tasks);
    }
    out
}

/// Grouped means as a grid, models ordered by overall mean. Short group
/// labels (languages) go across; long ones (subjects) go down.
pub fn pivot_table(rows: &[GroupMean], order: &[String]) -> String {
    let groups: Vec<&str> = rows
        .iter()
        .filter_map(|r| r.group.as_deref())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let cell: BTreeMap<(&str, &str), f64> = rows
        .iter()
        .filter_map(|r| r.group.as_deref().map(|g| ((r.model.as_str(), g), r.mean)))
        .collect();
    let models: Vec<&str> = order.iter().map(String::as_str).collect();
    let wide = groups.iter().any(|g| g.chars().count() > 12);
    let (down, across, head) = if wide {
        (&groups, &models, "group")
    } else {
        (&models, &groups, "model")
    };
    let w = down.iter().map(|s| s.chars().count()).max().unwrap_or(0).max(head.len());
    let cw = across.iter().map(|s| s.chars().count()).max().unwrap_or(0).max(6);
    let mut out = format!("{head:<w$}");
    for c in across {
        let _ = write!(out, "  {c:>cw$}");
    }
    out.push('\n');
    for r in down {
        let _ = write!(out, "{r:<w$}");
        for c in across {
            let k = if wide { (*c, *r) } else { (*r, *c) };
            match cell.get(&k) {
                Some(v) => {
                    let _ = write!(out, "  {v:>cw$.3}");
                }
                None => {
                    let _ = write!(out, "  {:>cw$}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

fn valid(scores: Vec<ScoreRecord>) -> (Vec<ScoreRecord>, usize) {
    let (ok, bad): (Vec<_>, Vec<_>) = scores.into_iter().partition(|s| !s.invalid);
    (ok, bad.len())
}

fn json_lines<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut out = String::new();
    for r in rows {
        out += &serde_json::to_string(&r)?;
        out.push('\n');
    }
    Ok(out)
}

fn group_name(g: GroupBy) -> &'static str {
    match g {
        GroupBy::Model => "model",
        GroupBy::Subject => "subject",
        GroupBy::Language => "language",
    }
}

pub fn rank(a: &RankArgs) -> Result<Status> {
    let run = RunDir::new(&a.out.out);
    let metric = Metric::from(a.metric);
    let group_by = GroupBy::from(a.group_by);
    let (scores, invalid) = valid(run.require_scores(metric)?);
    if scores.is_empty() {
        bail!("every {metric} score is marked invalid");
    }
    let (text, lines, name) = match (a.method, group_by) {
        (RankMethod::Mean, GroupBy::Model) => {
            let rows = rank_by_mean(&scores)?;
            (mean_table(metric, &rows, invalid), json_lines(&rows)?, format!("rank-{metric}-mean.jsonl"))
        }
        (RankMethod::Mean, g) => {
            let tasks = run.load_tasks(a.tasks.as_deref())?;
            let grouped = mean_scores(&scores, &tasks, g)?;
            let order: Vec<String> = rank_by_mean(&scores)?.into_iter().map(|r| r.model).collect();
            let name = format!("rank-{metric}-mean-{}.jsonl", group_name(g));
            (pivot_table(&grouped.rows, &order), json_lines(&grouped.rows)?, name)
        }
        (RankMethod::Gpa, GroupBy::Model) => {
            let g = gpa_ranking(&scores_by_task(&scores));
            (gpa_table(&g), json_lines(&g.rows)?, format!("rank-{metric}-gpa.jsonl"))
        }
        (RankMethod::Gpa, _) => bail!("--group-by subject/language applies to --method mean only"),
    };
    print!("{text}");
    std::fs::write(run.report_file(&name)?, lines)?;
    Ok(Status::from_problems(invalid))
}

fn elo_config(v: &VoteArgs) -> EloConfig {
    EloConfig {
        bootstrap_rounds: v.bootstrap_rounds,
        rng_seed: v.seed,
        ..EloConfig::default()
    }
}

fn leaderboard(votes: &[VoteRecord], v: &VoteArgs) -> Result<RatingTable> {
    Ok(bootstrap_ratings(votes, &elo_config(v), Parallelism::Parallel)?)
}

fn vote_summary(votes: &[VoteRecord]) -> String {
    let s = vote_stats(votes);
    format!("{} votes, {} ties (tie ratio {:.3})\n", s.total, s.ties, s.tie_ratio)
}

pub fn elo(a: &EloArgs) -> Result<Status> {
    let run = RunDir::new(&a.out.out);
    let (_, votes) = run.load_votes(a.votes.votes.as_deref())?;
    let table = leaderboard(&votes, &a.votes)?;
    print!("{}{}", table.to_text(), vote_summary(&votes));
    std::fs::write(run.report_file("elo.jsonl")?, table.to_json_lines())?;
    Ok(Status::Complete)
}

fn lookup(scores: &[ScoreRecord]) -> ScoreLookup {
    scores
        .iter()
        .filter(|s| !s.invalid)
        .map(|s| ((s.task_id.clone(), s.model.clone()), s.value))
        .collect()
}

fn align_reports(
    run: &RunDir,
    metrics: &[Metric],
    votes: &[VoteRecord],
    elo: &BTreeMap<String, f64>,
    opts: AlignmentOptions,
) -> Result<Vec<AlignmentReport>> {
    metrics
        .iter()
        .map(|&m| {
            let scores = run.require_scores(m)?;
            Ok(alignment_report(m.as_str(), votes, &lookup(&scores), elo, opts)?)
        })
        .collect()
}

pub fn align(a: &AlignArgs) -> Result<Status> {
    let run = RunDir::new(&a.out.out);
    let metrics: Vec<Metric> = if a.metrics.is_empty() {
        run.scored_metrics()?
    } else {
        a.metrics.iter().map(|&m| m.into()).collect()
    };
    if metrics.is_empty() {
        return Err(crate::run::missing(&run.scores(), "scores", "mdaware score"));
    }
    let (_, votes) = run.load_votes(a.votes.votes.as_deref())?;
    let elo = leaderboard(&votes, &a.votes)?.ratings();
    let opts = AlignmentOptions {
        include_ties: a.include_ties,
        tie_epsilon: a.tie_epsilon,
        per_task: a.per_task,
    };
    let reports = align_reports(&run, &metrics, &votes, &elo, opts)?;
    print!("{}", AlignmentReport::table(&reports));
    let r = &reports[0];
    println!(
        "{} votes used, {} ties skipped, ties {}, epsilon {}, {} {}",
        r.n_used,
        r.n_skipped_ties,
        if r.include_ties { "included" } else { "excluded" },
        r.tie_epsilon,
        r.n_points,
        if r.per_task { "tasks" } else { "models" }
    );
    std::fs::write(run.report_file("align.jsonl")?, json_lines(&reports)?)?;
    Ok(Status::Complete)
}

fn section(out: &mut String, title: &str, body: &str) {
    let _ = writeln!(out, "== {title} ==\n{body}");
}

/// Everything the run supports: rankings per metric, mdeval by language and
/// subject, grade-point ranking, and with votes the leaderboard and alignment.
pub fn report(a: &ReportArgs) -> Result<Status> {
    let run = RunDir::new(&a.out.out);
    let metrics = run.scored_metrics()?;
    if metrics.is_empty() {
        return Err(crate::run::missing(&run.scores(), "scores", "mdaware score"));
    }
    let tasks: Option<Vec<TaskRecord>> = run.load_tasks(a.tasks.as_deref()).ok();
    let mut text = String::new();
    let mut doc = serde_json::Map::new();
    let mut problems = 0;

    for &m in &metrics {
        let (scores, invalid) = valid(run.require_scores(m)?);
        problems += invalid;
        if scores.is_empty() {
            section(&mut text, &format!("{m}: no valid scores"), "");
            continue;
        }
        let rows = rank_by_mean(&scores)?;
        section(&mut text, &format!("{m} ranking"), &mean_table(m, &rows, invalid));
        let gpa = gpa_ranking(&scores_by_task(&scores));
        section(&mut text, &format!("{m} average grade points"), &gpa_table(&gpa));
        let mut entry = json!({"ranking": rows, "gpa": gpa.rows, "invalid": invalid});
        if let Some(tasks) = &tasks {
            let order: Vec<String> = rows.iter().map(|r| r.model.clone()).collect();
            for g in [GroupBy::Language, GroupBy::Subject] {
                let grouped = mean_scores(&scores, tasks, g)?;
                section(&mut text, &format!("{m} by {}", group_name(g)), &pivot_table(&grouped.rows, &order));
                entry[group_name(g)] = json!(grouped.rows);
            }
        }
        doc.insert(m.as_str().to_owned(), entry);
    }

    let votes_path = a.votes.votes.clone().unwrap_or_else(|| run.votes());
    if votes_path.exists() {
        let (_, votes) = run.load_votes(Some(&votes_path))?;
        let table = leaderboard(&votes, &a.votes)?;
        section(&mut text, "Elo leaderboard", &(table.to_text() + &vote_summary(&votes)));
        let elo = table.ratings();
        let mut align = Vec::new();
        for include_ties in [false, true] {
            let opts = AlignmentOptions {
                include_ties,
                tie_epsilon: a.tie_epsilon,
                per_task: false,
            };
            let reports = align_reports(&run, &metrics, &votes, &elo, opts)?;
            let title = if include_ties { "alignment with ties" } else { "alignment" };
            section(&mut text, title, &AlignmentReport::table(&reports));
            align.extend(reports);
        }
        doc.insert("elo".into(), json!(table.rows));
        doc.insert("votes".into(), json!(vote_stats(&votes)));
        doc.insert("alignment".into(), json!(align));
    } else {
        tracing::info!(path = %votes_path.display(), "no vote log; leaderboard and alignment omitted");
    }

    print!("{text}");
    std::fs::write(run.report_file("report.txt")?, &text)?;
    std::fs::write(run.report_file("report.json")?, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(Status::from_problems(problems))
}
