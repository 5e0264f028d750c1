use clap::Parser;
use mdaware_vote::ServeArgs;

#[derive(Parser)]
#[command(name = "mdaware-vote", version, about = "Anonymous pairwise voting service")]
struct Cli {
    #[command(flatten)]
    serve: ServeArgs,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    mdaware_vote::run(Cli::parse().serve).await
}
