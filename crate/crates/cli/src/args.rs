use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdaware_core::corpus::{GroupBy, Metric};
use mdaware_vote::ServeArgs;

#[derive(Debug, Parser)]
#[command(name = "mdaware", version, about = "Markdown Awareness evaluation pipeline")]
pub struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase 1: ask every model to answer every task.
    Generate(GenerateArgs),
    /// Phase 2: have the judge restructure each generated answer.
    Rewrite(RewriteArgs),
    /// Score generated answers against their rewrites, or with an LLM judge.
    Score(ScoreArgs),
    /// Rank models by mean score or by average per-task grade points.
    Rank(RankArgs),
    /// Elo leaderboard with bootstrap intervals from the vote log.
    Elo(EloArgs),
    /// Agreement between scorers and human votes.
    Align(AlignArgs),
    /// Every table the run directory supports, as text and JSON.
    Report(ReportArgs),
    /// Run the voting service.
    Serve(ServeArgs),
    /// Check a task file and report every bad line.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Mdeval,
    Drule,
    Pllm,
    Rllm,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Mdeval => Metric::Mdeval,
            MetricArg::Drule => Metric::Drule,
            MetricArg::Pllm => Metric::Pllm,
            MetricArg::Rllm => Metric::Rllm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupByArg {
    Model,
    Subject,
    Language,
}

impl From<GroupByArg> for GroupBy {
    fn from(g: GroupByArg) -> GroupBy {
        match g {
            GroupByArg::Model => GroupBy::Model,
            GroupByArg::Subject => GroupBy::Subject,
            GroupByArg::Language => GroupBy::Language,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankMethod {
    /// Arithmetic mean of scores.
    Mean,
    /// Per-task rank mapped to 4.0-scale points, averaged.
    Gpa,
}

#[derive(Debug, Clone, Args)]
pub struct OutArg {
    /// Run directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Task file, one JSON object per line.
    #[arg(long)]
    pub tasks: PathBuf,
    /// JSON file listing the model endpoints.
    #[arg(long)]
    pub models: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
    /// Regenerate existing answers; their rewrites and scores are dropped too.
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RewriteArgs {
    /// Judge endpoint file; defaults to the judge already recorded for the run.
    #[arg(long)]
    pub judge: Option<PathBuf>,
    /// Replacement rewrite template with a single `{text}` slot.
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
    /// Redo existing rewrites; scores that depend on them are dropped too.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// Repeat for several metrics.
    #[arg(long = "metric", value_enum, default_values_t = [MetricArg::Mdeval])]
    pub metrics: Vec<MetricArg>,
    /// Judge for pllm/rllm; defaults to the run's judge.
    #[arg(long)]
    pub judge: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
    /// Rescore the selected metrics, replacing stored values.
    #[arg(long)]
    pub force: bool,
    /// Compare serialized tag strings character by character.
    #[arg(long)]
    pub char_level: bool,
    /// D-Rule weights and decay as JSON.
    #[arg(long)]
    pub drule_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RankArgs {
    #[arg(long, value_enum, default_value_t = MetricArg::Mdeval)]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value_t = RankMethod::Mean)]
    pub method: RankMethod,
    #[arg(long, value_enum, default_value_t = GroupByArg::Model)]
    pub group_by: GroupByArg,
    /// Task file for subject/language grouping; defaults to the run's copy.
    #[arg(long)]
    pub tasks: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Clone, Args)]
pub struct VoteArgs {
    /// Vote log; defaults to votes.jsonl in the run directory.
    #[arg(long)]
    pub votes: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap_rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct EloArgs {
    #[command(flatten)]
    pub out: OutArg,
    #[command(flatten)]
    pub votes: VoteArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AlignArgs {
    /// Metrics to evaluate; defaults to every metric with scores.
    #[arg(long = "metric", value_enum)]
    pub metrics: Vec<MetricArg>,
    /// Count tie votes (correct when the score gap is within --tie-epsilon).
    #[arg(long)]
    pub include_ties: bool,
    #[arg(long, default_value_t = 0.0)]
    pub tie_epsilon: f64,
    /// Average per-task correlations instead of correlating model means.
    #[arg(long)]
    pub per_task: bool,
    #[command(flatten)]
    pub out: OutArg,
    #[command(flatten)]
    pub votes: VoteArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long, default_value_t = 0.0)]
    pub tie_epsilon: f64,
    /// Task file for the subject/language tables; defaults to the run's copy.
    #[arg(long)]
    pub tasks: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
    #[command(flatten)]
    pub votes: VoteArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub tasks: PathBuf,
}
