//! The `mdaware` commands. Each one reads and writes the record files of a
//! single run directory, skipping work whose output already exists.

pub mod args;
pub mod manifest;
mod pipeline;
mod reports;
pub mod run;

use anyhow::Result;

pub use args::{Cli, Command};
pub use reports::{gpa_table, mean_table, pivot_table};
pub use run::{RunDir, Status};

pub async fn execute(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Generate(a) => pipeline::generate(&a).await,
        Command::Rewrite(a) => pipeline::rewrite(&a).await,
        Command::Score(a) => pipeline::score(&a).await,
        Command::Rank(a) => reports::rank(&a),
        Command::Elo(a) => reports::elo(&a),
        Command::Align(a) => reports::align(&a),
        Command::Report(a) => reports::report(&a),
        Command::Serve(a) => mdaware_vote::run(a).await.map(|()| Status::Complete),
        Command::Validate(a) => {
            let tasks = mdaware_core::corpus::load_tasks(&a.tasks)?;
            println!("{}: {} valid task(s)", a.tasks.display(), tasks.len());
            Ok(Status::Complete)
        }
    }
}
