//! Agreement between a scorer and human votes.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratings::{Outcome, VoteRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignmentError {
    #[error("no score for task `{task_id}`, model `{model}`")]
    MissingScore { task_id: String, model: String },
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 paired values, got {0}")]
    TooFew(usize),
    #[error("correlation undefined: {0} has zero variance")]
    ZeroVariance(&'static str),
    #[error("no votes to evaluate")]
    NoVotes,
}

/// Scores keyed by (task_id, model).
pub type ScoreLookup = HashMap<(String, String), f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCounts {
    pub correct: usize,
    pub considered: usize,
    pub skipped_ties: usize,
    pub accuracy: f64,
}

fn lookup(scores: &ScoreLookup, task: &str, model: &str) -> Result<f64, AlignmentError> {
    scores
        .get(&(task.to_owned(), model.to_owned()))
        .copied()
        .ok_or_else(|| AlignmentError::MissingScore {
            task_id: task.to_owned(),
            model: model.to_owned(),
        })
}

/// Fraction of votes whose outcome agrees with the score ordering. Score gaps of
/// at most `tie_epsilon` count as a predicted tie.
pub fn record_accuracy(
    votes: &[VoteRecord],
    scores: &ScoreLookup,
    include_ties: bool,
    tie_epsilon: f64,
) -> Result<AccuracyCounts, AlignmentError> {
    let mut correct = 0;
    let mut considered = 0;
    let mut skipped_ties = 0;
    for v in votes {
        let s_i = lookup(scores, &v.task_id, &v.model_i)?;
        let s_j = lookup(scores, &v.task_id, &v.model_j)?;
        if v.outcome == Outcome::T && !include_ties {
            skipped_ties += 1;
            continue;
        }
        considered += 1;
        let hit = match v.outcome {
            Outcome::W => s_i - s_j > tie_epsilon,
            Outcome::L => s_j - s_i > tie_epsilon,
            Outcome::T => (s_i - s_j).abs() <= tie_epsilon,
        };
        correct += usize::from(hit);
    }
    if considered == 0 {
        return Err(AlignmentError::NoVotes);
    }
    Ok(AccuracyCounts {
        correct,
        considered,
        skipped_ties,
        accuracy: correct as f64 / considered as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub spearman: f64,
    pub pearson: f64,
    pub kendall: f64,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), AlignmentError> {
    if x.len() != y.len() {
        return Err(AlignmentError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(AlignmentError::TooFew(x.len()));
    }
    Ok(())
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AlignmentError> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(AlignmentError::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(AlignmentError::ZeroVariance("y"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let mean = (start + 1 + end) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = mean;
        }
        start = end;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AlignmentError> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Kendall tau-b via Knight's merge-sort algorithm.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64, AlignmentError> {
    check_pair(x, y)?;
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |run: usize| (run * run.saturating_sub(1) / 2) as u64;
    let tied_pairs = |key: &dyn Fn(usize, usize) -> bool, order: &[usize]| -> u64 {
        let mut total = 0;
        let mut run = 1;
        for w in order.windows(2) {
            if key(w[0], w[1]) {
                run += 1;
            } else {
                total += pairs(run);
                run = 1;
            }
        }
        total + pairs(run)
    };

    let ties_x = tied_pairs(&|a, b| x[a] == x[b], &idx);
    let ties_xy = tied_pairs(&|a, b| x[a] == x[b] && y[a] == y[b], &idx);

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let swaps = merge_count(&mut ys);

    let mut by_y: Vec<usize> = (0..n).collect();
    by_y.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    let ties_y = tied_pairs(&|a, b| y[a] == y[b], &by_y);

    let total = pairs(n);
    if ties_x == total {
        return Err(AlignmentError::ZeroVariance("x"));
    }
    if ties_y == total {
        return Err(AlignmentError::ZeroVariance("y"));
    }
    let numerator =
        total as f64 - ties_x as f64 - ties_y as f64 + ties_xy as f64 - 2.0 * swaps as f64;
    let denominator = (((total - ties_x) as f64) * ((total - ties_y) as f64)).sqrt();
    Ok((numerator / denominator).clamp(-1.0, 1.0))
}

// Sorts in place and returns the number of strictly inverted pairs.
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..]);
    v.copy_from_slice(&merged);
    swaps
}

pub fn correlations(x: &[f64], y: &[f64]) -> Result<Correlations, AlignmentError> {
    Ok(Correlations {
        spearman: spearman(x, y)?,
        pearson: pearson(x, y)?,
        kendall: kendall_tau_b(x, y)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentOptions {
    pub include_ties: bool,
    pub tie_epsilon: f64,
    /// Average per-task correlations instead of correlating per-model means.
    pub per_task: bool,
}

impl Default for AlignmentOptions {
    fn default() -> Self {
        AlignmentOptions {
            include_ties: false,
            tie_epsilon: 0.0,
            per_task: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub metric: String,
    pub accuracy: f64,
    pub n_used: usize,
    pub n_skipped_ties: usize,
    pub spearman: f64,
    pub pearson: f64,
    pub kendall: f64,
    pub include_ties: bool,
    pub tie_epsilon: f64,
    /// Number of models (or, in per-task mode, tasks) the correlations use.
    pub n_points: usize,
    pub per_task: bool,
}

impl AlignmentReport {
    /// Text table with Accuracy, Spearman, Pearson and Kendall columns.
    pub fn table(reports: &[AlignmentReport]) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8}  {:>8}  {:>8}  {:>8}  {:>8}",
            "method", "accuracy", "spearman", "pearson", "kendall"
        );
        for r in reports {
            let _ = writeln!(
                out,
                "{:<8}  {:>7.1}%  {:>8.3}  {:>8.3}  {:>8.3}",
                r.metric,
                r.accuracy * 100.0,
                r.spearman,
                r.pearson,
                r.kendall
            );
        }
        out
    }
}

/// Accuracy on the votes and correlations between the scorer and Elo ratings.
///
/// By default the correlations pair each model's mean score with its rating.
/// With `per_task`, coefficients are computed per task (models scored on that
/// task vs. their ratings) and averaged over tasks where they are defined.
pub fn alignment_report(
    metric: &str,
    votes: &[VoteRecord],
    scores: &ScoreLookup,
    elo: &BTreeMap<String, f64>,
    opts: AlignmentOptions,
) -> Result<AlignmentReport, AlignmentError> {
    let acc = record_accuracy(votes, scores, opts.include_ties, opts.tie_epsilon)?;

    let (corr, n_points) = if opts.per_task {
        per_task_correlations(scores, elo)?
    } else {
        let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        for ((_, model), &s) in scores {
            if elo.contains_key(model) {
                let e = sums.entry(model.as_str()).or_insert((0.0, 0));
                e.0 += s;
                e.1 += 1;
            }
        }
        let x: Vec<f64> = sums.values().map(|(s, n)| s / *n as f64).collect();
        let y: Vec<f64> = sums.keys().map(|m| elo[*m]).collect();
        (correlations(&x, &y)?, x.len())
    };

    Ok(AlignmentReport {
        metric: metric.to_owned(),
        accuracy: acc.accuracy,
        n_used: acc.considered,
        n_skipped_ties: acc.skipped_ties,
        spearman: corr.spearman,
        pearson: corr.pearson,
        kendall: corr.kendall,
        include_ties: opts.include_ties,
        tie_epsilon: opts.tie_epsilon,
        n_points,
        per_task: opts.per_task,
    })
}

fn per_task_correlations(
    scores: &ScoreLookup,
    elo: &BTreeMap<String, f64>,
) -> Result<(Correlations, usize), AlignmentError> {
    let mut by_task: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for ((task, model), &s) in scores {
        if elo.contains_key(model) {
            by_task.entry(task).or_default().insert(model, s);
        }
    }
    let mut sum = Correlations {
        spearman: 0.0,
        pearson: 0.0,
        kendall: 0.0,
    };
    let mut used = 0;
    for per_model in by_task.values() {
        let x: Vec<f64> = per_model.values().copied().collect();
        let y: Vec<f64> = per_model.keys().map(|m| elo[*m]).collect();
        if let Ok(c) = correlations(&x, &y) {
            sum.spearman += c.spearman;
            sum.pearson += c.pearson;
            sum.kendall += c.kendall;
            used += 1;
        }
    }
    if used == 0 {
        return Err(AlignmentError::TooFew(0));
    }
    let n = used as f64;
    Ok((
        Correlations {
            spearman: sum.spearman / n,
            pearson: sum.pearson / n,
            kendall: sum.kendall / n,
        },
        used,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(entries: &[(&str, &str, f64)]) -> ScoreLookup {
        entries
            .iter()
            .map(|(t, m, s)| ((t.to_string(), m.to_string()), *s))
            .collect()
    }

    fn vote(t: &str, i: &str, j: &str, o: Outcome) -> VoteRecord {
        VoteRecord::new(t, i, j, o)
    }

    #[test]
    fn accuracy_single_votes() {
        let s = scores(&[("t", "a", 0.9), ("t", "b", 0.4)]);
        let w = record_accuracy(&[vote("t", "a", "b", Outcome::W)], &s, false, 0.0).unwrap();
        assert_eq!(w.accuracy, 1.0);
        let l = record_accuracy(&[vote("t", "a", "b", Outcome::L)], &s, false, 0.0).unwrap();
        assert_eq!(l.accuracy, 0.0);
    }

    #[test]
    fn accuracy_excludes_ties() {
        let s = scores(&[("t", "a", 0.9), ("t", "b", 0.4)]);
        let votes = [
            vote("t", "a", "b", Outcome::W),
            vote("t", "b", "a", Outcome::W),
            vote("t", "a", "b", Outcome::T),
        ];
        let r = record_accuracy(&votes, &s, false, 0.0).unwrap();
        assert_eq!((r.correct, r.considered, r.skipped_ties), (1, 2, 1));
        assert_eq!(r.accuracy, 0.5);
        let with = record_accuracy(&votes, &s, true, 0.0).unwrap();
        assert_eq!((with.considered, with.skipped_ties), (3, 0));
        let loose = record_accuracy(&votes, &s, true, 0.6).unwrap();
        assert_eq!(loose.correct, 1);
    }

    #[test]
    fn missing_score_is_named() {
        let s = scores(&[("t", "a", 0.9)]);
        let err = record_accuracy(&[vote("t", "a", "b", Outcome::W)], &s, false, 0.0).unwrap_err();
        assert_eq!(
            err,
            AlignmentError::MissingScore {
                task_id: "t".into(),
                model: "b".into()
            }
        );
    }

    #[test]
    fn perfect_linear() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let c = correlations(&x, &y).unwrap();
        assert_eq!((c.pearson, c.spearman, c.kendall), (1.0, 1.0, 1.0));
    }

    #[test]
    fn perfect_inversion() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [9.0, 7.0, 3.0, 1.0];
        let c = correlations(&x, &y).unwrap();
        assert_eq!(c.spearman, -1.0);
        assert_eq!(c.kendall, -1.0);
    }

    #[test]
    fn one_swap() {
        let c = correlations(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((c.kendall - 4.0 / 6.0).abs() < 1e-12);
        assert!((c.spearman - 0.8).abs() < 1e-12);
    }

    #[test]
    fn ties_use_average_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn undefined_correlations_are_errors() {
        assert_eq!(
            correlations(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err(),
            AlignmentError::ZeroVariance("x")
        );
        assert_eq!(
            kendall_tau_b(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]).unwrap_err(),
            AlignmentError::ZeroVariance("y")
        );
        assert!(matches!(correlations(&[1.0, 2.0], &[1.0, 2.0]), Err(AlignmentError::TooFew(2))));
        assert!(matches!(
            correlations(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(AlignmentError::LengthMismatch(3, 2))
        ));
    }

    #[test]
    fn report_pairs_means_with_ratings() {
        let s = scores(&[
            ("t1", "a", 0.9),
            ("t1", "b", 0.5),
            ("t1", "c", 0.1),
            ("t2", "a", 0.7),
            ("t2", "b", 0.6),
            ("t2", "c", 0.3),
        ]);
        let elo: BTreeMap<String, f64> =
            [("a", 1050.0), ("b", 1000.0), ("c", 950.0)].iter().map(|(m, r)| (m.to_string(), *r)).collect();
        let votes = [vote("t1", "a", "b", Outcome::W), vote("t2", "c", "b", Outcome::T)];
        let r = alignment_report("mdeval", &votes, &s, &elo, AlignmentOptions::default()).unwrap();
        assert_eq!(r.n_used + r.n_skipped_ties, votes.len());
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.spearman, 1.0);
        assert_eq!(r.n_points, 3);
        let per_task = alignment_report(
            "mdeval",
            &votes,
            &s,
            &elo,
            AlignmentOptions {
                per_task: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(per_task.n_points, 2);
        assert_eq!(per_task.kendall, 1.0);
        assert!(AlignmentReport::table(&[r]).contains("100.0%"));
    }
}
