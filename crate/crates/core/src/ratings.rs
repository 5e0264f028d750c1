//! Elo ratings from pairwise human votes, bootstrap intervals, win rates and
//! per-task average ranking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Parallelism;

/// Human judgment for a pair, from the point of view of `model_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    /// `model_i` preferred.
    W,
    /// `model_j` preferred.
    L,
    /// Tie.
    T,
}

impl Outcome {
    pub fn parse(s: &str) -> Option<Outcome> {
        match s {
            "W" => Some(Outcome::W),
            "L" => Some(Outcome::L),
            "T" => Some(Outcome::T),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::W => "W",
            Outcome::L => "L",
            Outcome::T => "T",
        }
    }
}

/// One line of the vote log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub task_id: String,
    pub model_i: String,
    pub model_j: String,
    pub outcome: Outcome,
    /// Milliseconds since the epoch; absent in hand-written logs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts: Option<i64>,
    /// Optional opaque session tag for dedup analytics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
}

impl VoteRecord {
    pub fn new(task_id: &str, model_i: &str, model_j: &str, outcome: Outcome) -> Self {
        VoteRecord {
            task_id: task_id.to_owned(),
            model_i: model_i.to_owned(),
            model_j: model_j.to_owned(),
            outcome,
            ts: None,
            session: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RatingsError {
    #[error("no votes")]
    NoVotes,
    #[error("vote {index}: {reason}")]
    BadVote { index: usize, reason: String },
    #[error("invalid Elo configuration: {0}")]
    Config(String),
    #[error("ratings must be finite, got {0} and {1}")]
    NonFinite(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EloConfig {
    pub base_rating: f64,
    /// Logistic scale (`d`).
    pub scale: f64,
    /// Update step (`K`).
    pub k: f64,
    pub bootstrap_rounds: usize,
    pub rng_seed: u64,
}

impl Default for EloConfig {
    fn default() -> Self {
        EloConfig {
            base_rating: 1000.0,
            scale: 400.0,
            k: 10.0,
            bootstrap_rounds: 1000,
            rng_seed: 0,
        }
    }
}

impl EloConfig {
    pub fn validate(&self) -> Result<(), RatingsError> {
        if self.scale.is_nan() || self.scale <= 0.0 {
            return Err(RatingsError::Config(format!("d must be positive, got {}", self.scale)));
        }
        if self.k.is_nan() || self.k <= 0.0 {
            return Err(RatingsError::Config(format!("K must be positive, got {}", self.k)));
        }
        if self.bootstrap_rounds == 0 {
            return Err(RatingsError::Config("bootstrap_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

/// Probability that a player rated `s_i` beats one rated `s_j`:
/// `10^(s_i/d) / (10^(s_i/d) + 10^(s_j/d))`.
pub fn expected_score(s_i: f64, s_j: f64, d: f64) -> Result<f64, RatingsError> {
    if !s_i.is_finite() || !s_j.is_finite() {
        return Err(RatingsError::NonFinite(s_i, s_j));
    }
    Ok(expected(s_i, s_j, d))
}

// Written as 1 / (1 + 10^((s_j - s_i)/d)) so large ratings cannot overflow.
fn expected(s_i: f64, s_j: f64, d: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((s_j - s_i) / d))
}

/// Score actually obtained by `model_i`; `model_j` receives the complement.
pub fn actual_score(outcome: Outcome) -> f64 {
    match outcome {
        Outcome::W => 1.0,
        Outcome::L => 0.0,
        Outcome::T => 0.5,
    }
}

/// Replay order: ascending `ts`, ingestion order among equal stamps; votes
/// without a stamp follow all stamped ones in ingestion order.
pub fn replay_order(votes: &[VoteRecord]) -> Vec<&VoteRecord> {
    let mut ordered: Vec<&VoteRecord> = votes.iter().collect();
    ordered.sort_by_key(|v| (v.ts.is_none(), v.ts));
    ordered
}

/// Ratings after a sequential replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EloRatings {
    pub ratings: BTreeMap<String, f64>,
    pub games: BTreeMap<String, usize>,
}

fn check_vote(index: usize, v: &VoteRecord) -> Result<(), RatingsError> {
    if v.model_i == v.model_j {
        return Err(RatingsError::BadVote {
            index,
            reason: format!("model `{}` compared with itself", v.model_i),
        });
    }
    Ok(())
}

fn apply(ratings: &mut BTreeMap<String, f64>, v: &VoteRecord, cfg: &EloConfig) {
    let r_i = ratings[&v.model_i];
    let r_j = ratings[&v.model_j];
    let e_i = expected(r_i, r_j, cfg.scale);
    let delta = cfg.k * (actual_score(v.outcome) - e_i);
    // model_j's update is k * ((1 - a) - (1 - e_i)) = -delta
    *ratings.get_mut(&v.model_i).expect("seeded") = r_i + delta;
    *ratings.get_mut(&v.model_j).expect("seeded") = r_j - delta;
}

fn seeded<'a>(models: impl IntoIterator<Item = &'a str>, base: f64) -> BTreeMap<String, f64> {
    models.into_iter().map(|m| (m.to_owned(), base)).collect()
}

/// Sequential Elo replay. Every model in `models` and every model appearing in
/// a vote starts at the base rating.
pub fn replay_with_models(
    votes: &[VoteRecord],
    models: &[String],
    cfg: &EloConfig,
) -> Result<EloRatings, RatingsError> {
    cfg.validate()?;
    for (index, v) in votes.iter().enumerate() {
        check_vote(index, v)?;
    }
    let names = models
        .iter()
        .map(String::as_str)
        .chain(votes.iter().flat_map(|v| [v.model_i.as_str(), v.model_j.as_str()]));
    let mut ratings = seeded(names, cfg.base_rating);
    let mut games: BTreeMap<String, usize> = ratings.keys().map(|m| (m.clone(), 0)).collect();
    for v in replay_order(votes) {
        apply(&mut ratings, v, cfg);
        *games.get_mut(&v.model_i).expect("seeded") += 1;
        *games.get_mut(&v.model_j).expect("seeded") += 1;
    }
    Ok(EloRatings { ratings, games })
}

pub fn replay(votes: &[VoteRecord], cfg: &EloConfig) -> Result<EloRatings, RatingsError> {
    replay_with_models(votes, &[], cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub model: String,
    pub rating: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub games: usize,
}

/// Leaderboard rows sorted by rating, highest first (model name breaks ties).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingTable {
    pub rows: Vec<RatingRow>,
}

impl RatingTable {
    /// Table with degenerate intervals from a plain replay.
    pub fn from_replay(r: &EloRatings) -> Self {
        let rows = r
            .ratings
            .iter()
            .map(|(m, &rating)| RatingRow {
                model: m.clone(),
                rating,
                ci_low: rating,
                ci_high: rating,
                games: r.games.get(m).copied().unwrap_or(0),
            })
            .collect();
        Self::sorted(rows)
    }

    fn sorted(mut rows: Vec<RatingRow>) -> Self {
        rows.sort_by(|a, b| {
            b.rating
                .total_cmp(&a.rating)
                .then_with(|| a.model.cmp(&b.model))
        });
        RatingTable { rows }
    }

    pub fn get(&self, model: &str) -> Option<&RatingRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn ratings(&self) -> BTreeMap<String, f64> {
        self.rows.iter().map(|r| (r.model.clone(), r.rating)).collect()
    }

    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.model.chars().count())
            .max()
            .unwrap_or(0)
            .max("model".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>4}  {:<width$}  {:>9}  {:>9}  {:>9}  {:>6}",
            "rank", "model", "rating", "ci_low", "ci_high", "games"
        );
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>4}  {:<width$}  {:>9.2}  {:>9.2}  {:>9.2}  {:>6}",
                i + 1,
                r.model,
                r.rating,
                r.ci_low,
                r.ci_high,
                r.games
            );
        }
        out
    }

    /// One JSON object per row.
    pub fn to_json_lines(&self) -> String {
        self.rows
            .iter()
            .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
            .collect()
    }
}

/// Nearest-rank quantile of sorted data: the `ceil(q * n)`-th smallest value.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Per-model ratings from each bootstrap round, in round order.
pub fn bootstrap_samples(
    votes: &[VoteRecord],
    cfg: &EloConfig,
    mode: Parallelism,
) -> Result<BTreeMap<String, Vec<f64>>, RatingsError> {
    cfg.validate()?;
    if votes.is_empty() {
        return Err(RatingsError::NoVotes);
    }
    for (index, v) in votes.iter().enumerate() {
        check_vote(index, v)?;
    }
    let ordered = replay_order(votes);
    let models: BTreeSet<&str> = votes
        .iter()
        .flat_map(|v| [v.model_i.as_str(), v.model_j.as_str()])
        .collect();

    let rounds: Vec<BTreeMap<String, f64>> = mode.map_range(cfg.bootstrap_rounds, |round| {
        // each round has its own stream so results do not depend on scheduling
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(round as u64);
        let mut ratings = seeded(models.iter().copied(), cfg.base_rating);
        for _ in 0..ordered.len() {
            let v = ordered[rng.random_range(0..ordered.len())];
            apply(&mut ratings, v, cfg);
        }
        ratings
    });

    let mut samples: BTreeMap<String, Vec<f64>> =
        models.iter().map(|m| (m.to_string(), Vec::with_capacity(rounds.len()))).collect();
    for round in rounds {
        for (m, r) in round {
            samples.get_mut(&m).expect("same model set").push(r);
        }
    }
    Ok(samples)
}

/// Bootstrap Elo: median rating and 2.5% / 97.5% nearest-rank quantiles over
/// `bootstrap_rounds` resamples with replacement.
pub fn bootstrap_ratings(
    votes: &[VoteRecord],
    cfg: &EloConfig,
    mode: Parallelism,
) -> Result<RatingTable, RatingsError> {
    let samples = bootstrap_samples(votes, cfg, mode)?;
    let games = replay(votes, cfg)?.games;
    let rows = samples
        .into_iter()
        .map(|(model, mut values)| {
            values.sort_by(f64::total_cmp);
            RatingRow {
                rating: nearest_rank(&values, 0.5),
                ci_low: nearest_rank(&values, 0.025),
                ci_high: nearest_rank(&values, 0.975),
                games: games.get(&model).copied().unwrap_or(0),
                model,
            }
        })
        .collect();
    Ok(RatingTable::sorted(rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteStats {
    pub total: usize,
    pub ties: usize,
    pub tie_ratio: f64,
}

pub fn vote_stats(votes: &[VoteRecord]) -> VoteStats {
    let ties = votes.iter().filter(|v| v.outcome == Outcome::T).count();
    VoteStats {
        total: votes.len(),
        ties,
        tie_ratio: if votes.is_empty() {
            0.0
        } else {
            ties as f64 / votes.len() as f64
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub win_rate: f64,
}

impl PairRecord {
    pub fn games(&self) -> usize {
        self.wins + self.losses + self.ties
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateMatrix {
    /// Keyed by (row model, column model); pairs that never met are absent.
    pub pairs: BTreeMap<(String, String), PairRecord>,
}

impl WinRateMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<&PairRecord> {
        self.pairs.get(&(a.to_owned(), b.to_owned()))
    }

    /// Games-weighted mean win rate over all opponents.
    pub fn average_win_rates(&self) -> BTreeMap<String, f64> {
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for ((a, _), rec) in &self.pairs {
            let e = acc.entry(a.clone()).or_insert((0.0, 0));
            e.0 += rec.wins as f64 + 0.5 * rec.ties as f64;
            e.1 += rec.games();
        }
        acc.into_iter()
            .map(|(m, (points, games))| (m, points / games as f64))
            .collect()
    }
}

/// `win_rate(a, b) = (wins + ties / 2) / games`, stored for both orientations.
pub fn win_rate_matrix(votes: &[VoteRecord]) -> WinRateMatrix {
    let mut counts: BTreeMap<(String, String), (usize, usize, usize)> = BTreeMap::new();
    for v in votes.iter().filter(|v| v.model_i != v.model_j) {
        let (w, l) = match v.outcome {
            Outcome::W => (1, 0),
            Outcome::L => (0, 1),
            Outcome::T => (0, 0),
        };
        let t = usize::from(v.outcome == Outcome::T);
        let fwd = counts.entry((v.model_i.clone(), v.model_j.clone())).or_default();
        fwd.0 += w;
        fwd.1 += l;
        fwd.2 += t;
        let back = counts.entry((v.model_j.clone(), v.model_i.clone())).or_default();
        back.0 += l;
        back.1 += w;
        back.2 += t;
    }
    let pairs = counts
        .into_iter()
        .map(|(k, (wins, losses, ties))| {
            let games = (wins + losses + ties) as f64;
            let win_rate = (wins as f64 + 0.5 * ties as f64) / games;
            (k, PairRecord { wins, losses, ties, win_rate })
        })
        .collect();
    WinRateMatrix { pairs }
}

/// Points awarded for a per-task rank on the 4.0 scale; ranks past 9 get 1.0.
pub fn gpa_points(rank: usize) -> f64 {
    const TABLE: [f64; 9] = [4.0, 3.7, 3.3, 3.0, 2.7, 2.3, 2.0, 1.7, 1.3];
    match rank {
        1..=9 => TABLE[rank - 1],
        _ => 1.0,
    }
}

/// Competition ranks ("1224") by descending score; equal scores share the best rank.
pub fn competition_ranks(scores: &BTreeMap<String, f64>) -> BTreeMap<String, usize> {
    scores
        .iter()
        .map(|(m, &s)| {
            let better = scores.values().filter(|&&o| o > s).count();
            (m.clone(), better + 1)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpaRow {
    pub model: String,
    pub average: f64,
    pub tasks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpaRanking {
    /// Sorted by average, highest first (model name breaks ties).
    pub rows: Vec<GpaRow>,
    /// Tasks scored for fewer than two models.
    pub skipped_tasks: usize,
}

/// Average 4.0-scale points per model over tasks. `scores` maps task → model → score.
pub fn gpa_ranking(scores: &BTreeMap<String, BTreeMap<String, f64>>) -> GpaRanking {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut skipped_tasks = 0;
    for per_model in scores.values() {
        if per_model.len() < 2 {
            skipped_tasks += 1;
            continue;
        }
        for (model, rank) in competition_ranks(per_model) {
            let e = acc.entry(model).or_insert((0.0, 0));
            e.0 += gpa_points(rank);
            e.1 += 1;
        }
    }
    if skipped_tasks > 0 {
        tracing::warn!(skipped_tasks, "tasks with a single model skipped in average ranking");
    }
    let mut rows: Vec<GpaRow> = acc
        .into_iter()
        .map(|(model, (sum, tasks))| GpaRow {
            model,
            average: sum / tasks as f64,
            tasks,
        })
        .collect();
    rows.sort_by(|a, b| b.average.total_cmp(&a.average).then_with(|| a.model.cmp(&b.model)));
    GpaRanking { rows, skipped_tasks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vote(i: &str, j: &str, o: Outcome) -> VoteRecord {
        VoteRecord::new("t", i, j, o)
    }

    #[test]
    fn expected_score_examples() {
        assert_eq!(expected_score(1000.0, 1000.0, 400.0).unwrap(), 0.5);
        assert!((expected_score(1400.0, 1000.0, 400.0).unwrap() - 10.0 / 11.0).abs() < 1e-12);
        assert!((expected_score(1000.0, 1400.0, 400.0).unwrap() - 1.0 / 11.0).abs() < 1e-12);
        assert!(expected_score(f64::NAN, 0.0, 400.0).is_err());
    }

    #[test]
    fn actual_scores() {
        assert_eq!(actual_score(Outcome::W), 1.0);
        assert_eq!(actual_score(Outcome::T), 0.5);
        assert_eq!(actual_score(Outcome::L), 0.0);
    }

    #[test]
    fn single_decisive_vote() {
        let r = replay(&[vote("a", "b", Outcome::W)], &EloConfig::default()).unwrap();
        assert_eq!(r.ratings["a"], 1005.0);
        assert_eq!(r.ratings["b"], 995.0);
    }

    #[test]
    fn single_tie_leaves_equal_ratings() {
        let r = replay(&[vote("a", "b", Outcome::T)], &EloConfig::default()).unwrap();
        assert_eq!(r.ratings["a"], 1000.0);
        assert_eq!(r.ratings["b"], 1000.0);
    }

    #[test]
    fn empty_replay_keeps_listed_models_at_base() {
        let models = vec!["x".to_owned(), "y".to_owned()];
        let r = replay_with_models(&[], &models, &EloConfig::default()).unwrap();
        assert_eq!(r.ratings.len(), 2);
        assert!(r.ratings.values().all(|&v| v == 1000.0));
    }

    #[test]
    fn self_comparison_rejected_with_index() {
        let votes = [vote("a", "b", Outcome::W), vote("c", "c", Outcome::T)];
        assert_eq!(
            replay(&votes, &EloConfig::default()).unwrap_err(),
            RatingsError::BadVote {
                index: 1,
                reason: "model `c` compared with itself".into()
            }
        );
    }

    #[test]
    fn replay_follows_timestamps() {
        let mut first = vote("a", "b", Outcome::W);
        first.ts = Some(2);
        let mut second = vote("a", "b", Outcome::L);
        second.ts = Some(1);
        let unstamped = vote("b", "c", Outcome::W);
        let votes = [first.clone(), unstamped.clone(), second.clone()];
        assert_eq!(replay_order(&votes), vec![&second, &first, &unstamped]);
    }

    #[test]
    fn bootstrap_requires_votes() {
        assert_eq!(
            bootstrap_ratings(&[], &EloConfig::default(), Parallelism::Sequential).unwrap_err(),
            RatingsError::NoVotes
        );
    }

    #[test]
    fn bootstrap_single_round_collapses_interval() {
        let votes: Vec<_> = (0..10).map(|_| vote("a", "b", Outcome::W)).collect();
        let cfg = EloConfig {
            bootstrap_rounds: 1,
            ..Default::default()
        };
        let t = bootstrap_ratings(&votes, &cfg, Parallelism::Sequential).unwrap();
        for row in &t.rows {
            assert_eq!(row.ci_low, row.ci_high);
            assert_eq!(row.ci_low, row.rating);
        }
    }

    #[test]
    fn bootstrap_separates_dominant_model() {
        let votes: Vec<_> = (0..50).map(|_| vote("a", "b", Outcome::W)).collect();
        let cfg = EloConfig {
            bootstrap_rounds: 200,
            rng_seed: 3,
            ..Default::default()
        };
        let t = bootstrap_ratings(&votes, &cfg, Parallelism::Parallel).unwrap();
        assert!(t.get("a").unwrap().ci_low > t.get("b").unwrap().ci_high);
        assert_eq!(t.get("a").unwrap().games, 50);
    }

    #[test]
    fn nearest_rank_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(nearest_rank(&v, 0.5), 2.0);
        assert_eq!(nearest_rank(&v, 0.025), 1.0);
        assert_eq!(nearest_rank(&v, 0.975), 4.0);
        assert_eq!(nearest_rank(&[7.0], 0.5), 7.0);
    }

    #[test]
    fn win_rates() {
        let mut votes = vec![];
        votes.extend((0..3).map(|_| vote("A", "B", Outcome::W)));
        votes.push(vote("B", "A", Outcome::W));
        let m = win_rate_matrix(&votes);
        assert_eq!(m.get("A", "B").unwrap().win_rate, 0.75);
        assert_eq!(m.get("B", "A").unwrap().win_rate, 0.25);
        assert!(m.get("A", "C").is_none());

        let ties = win_rate_matrix(&[vote("A", "B", Outcome::T), vote("B", "A", Outcome::T)]);
        assert_eq!(ties.get("A", "B").unwrap().win_rate, 0.5);
    }

    #[test]
    fn average_win_rate_is_games_weighted() {
        let mut votes = vec![];
        votes.extend((0..3).map(|_| vote("A", "B", Outcome::W)));
        votes.push(vote("A", "C", Outcome::L));
        let avg = win_rate_matrix(&votes).average_win_rates();
        assert_eq!(avg["A"], 0.75);
        assert_eq!(avg["C"], 1.0);
    }

    #[test]
    fn tie_ratio() {
        let votes = [
            vote("a", "b", Outcome::W),
            vote("a", "b", Outcome::T),
            vote("a", "b", Outcome::L),
            vote("a", "b", Outcome::W),
        ];
        assert_eq!(vote_stats(&votes).tie_ratio, 0.25);
    }

    fn task(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(m, s)| (m.to_string(), *s)).collect()
    }

    #[test]
    fn gpa_table_values() {
        let expected = [4.0, 3.7, 3.3, 3.0, 2.7, 2.3, 2.0, 1.7, 1.3];
        for (i, &p) in expected.iter().enumerate() {
            assert_eq!(gpa_points(i + 1), p);
        }
        assert_eq!(gpa_points(10), 1.0);
    }

    #[test]
    fn gpa_examples() {
        let mut scores = BTreeMap::new();
        scores.insert("t1".to_owned(), task(&[("a", 0.9), ("b", 0.5), ("c", 0.1)]));
        scores.insert("t2".to_owned(), task(&[("a", 0.2), ("b", 0.5), ("c", 0.6)]));
        scores.insert("t3".to_owned(), task(&[("a", 0.7)]));
        let g = gpa_ranking(&scores);
        assert_eq!(g.skipped_tasks, 1);
        let a = g.rows.iter().find(|r| r.model == "a").unwrap();
        assert!((a.average - 3.65).abs() < 1e-12);
        let b = g.rows.iter().find(|r| r.model == "b").unwrap();
        assert!((b.average - 3.7).abs() < 1e-12);
    }

    #[test]
    fn gpa_ties_share_best_rank() {
        let ranks = competition_ranks(&task(&[("a", 0.5), ("b", 0.5), ("c", 0.1)]));
        assert_eq!(ranks["a"], 1);
        assert_eq!(ranks["b"], 1);
        assert_eq!(ranks["c"], 3);
    }
}
