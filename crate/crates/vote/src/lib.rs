//! HTTP service for anonymous pairwise voting.
//!
//! `GET /api/pair` hands out a ticket with two responses to one task and no
//! model names. `POST /api/vote` records the verdict, appending to the vote
//! log before answering, and only then reveals which models were compared.
//! `GET /api/leaderboard` replays the log into Elo ratings.

mod catalog;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mdaware_core::corpus::{now_millis, Store, VOTES_FILE};
use mdaware_core::par::Parallelism;
use mdaware_core::ratings::{
    bootstrap_ratings, replay_with_models, vote_stats, EloConfig, Outcome, RatingRow, RatingTable,
    VoteRecord,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

pub use catalog::{Catalog, CatalogTask};

#[derive(Debug, Error)]
pub enum VoteError {
    #[error("{0} not found; run `mdaware generate` first")]
    MissingResponses(PathBuf),
    #[error("cannot load responses: {0}")]
    Load(String),
    #[error("cannot read vote log: {0}")]
    Votes(String),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub ticket_ttl: Duration,
    pub elo: EloConfig,
    /// Recompute bootstrap intervals after this many new votes.
    pub ci_every: usize,
    /// Fixes pair sampling and ticket ids; `None` seeds from the OS.
    pub seed: Option<u64>,
    /// Allowed CORS origins; empty allows any.
    pub cors_origins: Vec<String>,
    /// Static UI bundle served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            ticket_ttl: Duration::from_secs(30 * 60),
            elo: EloConfig::default(),
            ci_every: 10,
            seed: None,
            cors_origins: Vec::new(),
            static_dir: None,
        }
    }
}

#[derive(Debug, Clone)]
struct Ticket {
    task: usize,
    left: String,
    right: String,
    issued: Instant,
    voted: bool,
}

/// What the client sees before voting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairView {
    pub pair_id: String,
    pub task_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    pub left: String,
    pub right: String,
    pub expires_in_secs: u64,
}

/// Answer to an accepted vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteReceipt {
    pub pair_id: String,
    pub outcome: Outcome,
    pub model_left: String,
    pub model_right: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub rows: Vec<RatingRow>,
    pub total_votes: usize,
    pub ties: usize,
    pub tie_ratio: f64,
    /// Vote count the intervals were computed from.
    pub ci_votes: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum ApiError {
    #[error("{0}")]
    NotEnoughData(String),
    #[error("unknown pair_id `{0}`")]
    UnknownPair(String),
    #[error("pair_id `{0}` has expired")]
    Expired(String),
    #[error("pair_id `{0}` already has a vote")]
    AlreadyVoted(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::NotEnoughData(_) | ApiError::AlreadyVoted(_) => StatusCode::CONFLICT,
            ApiError::UnknownPair(_) => StatusCode::NOT_FOUND,
            ApiError::Expired(_) => StatusCode::GONE,
            ApiError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(serde_json::json!({ "error": self.to_string() }));
        (self.status(), body).into_response()
    }
}

#[derive(Debug, Default)]
struct CiCache {
    votes_seen: usize,
    table: Option<RatingTable>,
}

pub struct AppState {
    catalog: Catalog,
    config: ServiceConfig,
    votes: Store<VoteRecord>,
    tickets: Mutex<TicketBook>,
    /// Last durable vote log; leaderboard reads clone the `Arc` and never
    /// hold the lock while computing.
    snapshot: RwLock<Arc<Vec<VoteRecord>>>,
    ci: tokio::sync::Mutex<CiCache>,
}

struct TicketBook {
    open: HashMap<String, Ticket>,
    rng: StdRng,
    issued: u64,
    last_ts: i64,
}

impl AppState {
    /// Opens the vote log (creating nothing until the first vote) and loads
    /// the votes already recorded in it.
    pub fn new(catalog: Catalog, votes_path: impl Into<PathBuf>, config: ServiceConfig) -> Result<Self, VoteError> {
        let votes: Store<VoteRecord> = Store::open(votes_path.into());
        let existing = votes.read_all().map_err(|e| VoteError::Votes(e.to_string()))?;
        let last_ts = existing.iter().filter_map(|v| v.ts).max().unwrap_or(0);
        let rng = match config.seed {
            Some(s) => StdRng::seed_from_u64(s),
            None => StdRng::from_os_rng(),
        };
        Ok(AppState {
            catalog,
            config,
            votes,
            tickets: Mutex::new(TicketBook {
                open: HashMap::new(),
                rng,
                issued: 0,
                last_ts,
            }),
            snapshot: RwLock::new(Arc::new(existing)),
            ci: tokio::sync::Mutex::new(CiCache::default()),
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn votes_path(&self) -> &Path {
        self.votes.path()
    }

    /// Samples a task uniformly, then an ordered pair of distinct models
    /// uniformly; the order is the left/right placement.
    pub fn issue_ticket(&self) -> Result<PairView, ApiError> {
        if !self.catalog.is_servable() {
            return Err(ApiError::NotEnoughData(format!(
                "no task has responses from two or more models ({} model(s) loaded)",
                self.catalog.models.len()
            )));
        }
        let mut book = self.tickets.lock().unwrap_or_else(|p| p.into_inner());
        let ti = book.rng.random_range(0..self.catalog.tasks.len());
        let task = &self.catalog.tasks[ti];
        let n = task.responses.len();
        let a = book.rng.random_range(0..n);
        let mut b = book.rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let pair_id = uuid::Builder::from_random_bytes(book.rng.random()).into_uuid().to_string();

        book.issued += 1;
        if book.issued % 256 == 0 {
            let keep = self.config.ticket_ttl * 2;
            book.open.retain(|_, t| t.issued.elapsed() < keep);
        }
        book.open.insert(
            pair_id.clone(),
            Ticket {
                task: ti,
                left: task.responses[a].0.clone(),
                right: task.responses[b].0.clone(),
                issued: Instant::now(),
                voted: false,
            },
        );
        Ok(PairView {
            pair_id,
            task_id: task.task_id.clone(),
            prompt: task.prompt.clone(),
            left: task.responses[a].1.clone(),
            right: task.responses[b].1.clone(),
            expires_in_secs: self.config.ticket_ttl.as_secs(),
        })
    }

    /// The hidden (left, right) models of a ticket. Never exposed over HTTP;
    /// meant for audits and tests.
    pub fn hidden_pair(&self, pair_id: &str) -> Option<(String, String)> {
        let book = self.tickets.lock().unwrap_or_else(|p| p.into_inner());
        book.open.get(pair_id).map(|t| (t.left.clone(), t.right.clone()))
    }

    /// Appends the vote, then marks the ticket used. The ticket lock is held
    /// across the append so a pair can never be recorded twice.
    pub fn record_vote(&self, pair_id: &str, outcome: Outcome, session: Option<String>) -> Result<VoteReceipt, ApiError> {
        let mut book = self.tickets.lock().unwrap_or_else(|p| p.into_inner());
        let ttl = self.config.ticket_ttl;
        let ticket = book
            .open
            .get(pair_id)
            .ok_or_else(|| ApiError::UnknownPair(pair_id.to_owned()))?;
        if ticket.voted {
            return Err(ApiError::AlreadyVoted(pair_id.to_owned()));
        }
        if ticket.issued.elapsed() > ttl {
            return Err(ApiError::Expired(pair_id.to_owned()));
        }
        let task_id = self.catalog.tasks[ticket.task].task_id.clone();
        let (left, right) = (ticket.left.clone(), ticket.right.clone());
        let ts = now_millis().max(book.last_ts + 1);
        let vote = VoteRecord {
            ts: Some(ts),
            session,
            ..VoteRecord::new(&task_id, &left, &right, outcome)
        };
        self.votes
            .append(&vote)
            .map_err(|e| ApiError::Internal(format!("vote not recorded: {e}")))?;
        book.last_ts = ts;
        book.open.get_mut(pair_id).expect("checked above").voted = true;
        {
            let mut snap = self.snapshot.write().unwrap_or_else(|p| p.into_inner());
            Arc::make_mut(&mut snap).push(vote);
        }
        tracing::info!(pair_id, task = %task_id, outcome = outcome.as_str(), "vote recorded");
        Ok(VoteReceipt {
            pair_id: pair_id.to_owned(),
            outcome,
            model_left: left,
            model_right: right,
        })
    }

    fn snapshot(&self) -> Arc<Vec<VoteRecord>> {
        self.snapshot.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    /// Replay ratings for every known model, with bootstrap intervals that
    /// are recomputed once `ci_every` new votes have arrived.
    pub async fn leaderboard(&self) -> Result<Leaderboard, ApiError> {
        let votes = self.snapshot();
        let elo = &self.config.elo;
        let replayed = replay_with_models(&votes, &self.catalog.models, elo)
            .map_err(|e| ApiError::Internal(e.to_string()))?;

        let ci_table = {
            let mut cache = self.ci.lock().await;
            let stale = votes.len() >= cache.votes_seen + self.config.ci_every.max(1)
                || (cache.table.is_none() && !votes.is_empty());
            if stale {
                let (v, cfg) = (votes.clone(), elo.clone());
                let table = tokio::task::spawn_blocking(move || bootstrap_ratings(&v, &cfg, Parallelism::Parallel))
                    .await
                    .map_err(|e| ApiError::Internal(e.to_string()))?
                    .map_err(|e| ApiError::Internal(e.to_string()))?;
                cache.table = Some(table);
                cache.votes_seen = votes.len();
            }
            cache.table.clone().map(|t| (t, cache.votes_seen))
        };

        let mut table = RatingTable::from_replay(&replayed);
        let mut ci_votes = 0;
        if let Some((boot, seen)) = ci_table {
            ci_votes = seen;
            for row in &mut table.rows {
                if let Some(b) = boot.get(&row.model) {
                    row.ci_low = b.ci_low;
                    row.ci_high = b.ci_high;
                }
            }
        }
        let stats = vote_stats(&votes);
        Ok(Leaderboard {
            rows: table.rows,
            total_votes: stats.total,
            ties: stats.ties,
            tie_ratio: stats.tie_ratio,
            ci_votes,
        })
    }
}

async fn get_pair(State(s): State<Arc<AppState>>) -> Result<Json<PairView>, ApiError> {
    s.issue_ticket().map(Json)
}

#[derive(Deserialize)]
struct VoteBody {
    pair_id: String,
    outcome: String,
    #[serde(default)]
    session: Option<String>,
}

async fn post_vote(State(s): State<Arc<AppState>>, body: Bytes) -> Result<Json<VoteReceipt>, ApiError> {
    let body: VoteBody =
        serde_json::from_slice(&body).map_err(|e| ApiError::Invalid(format!("bad vote body: {e}")))?;
    let outcome = Outcome::parse(&body.outcome).ok_or_else(|| {
        ApiError::Invalid(format!("outcome must be \"W\", \"L\" or \"T\", got {:?}", body.outcome))
    })?;
    s.record_vote(&body.pair_id, outcome, body.session).map(Json)
}

async fn get_leaderboard(State(s): State<Arc<AppState>>) -> Result<Json<Leaderboard>, ApiError> {
    s.leaderboard().await.map(Json)
}

fn cors(origins: &[String]) -> CorsLayer {
    let allow = if origins.is_empty() {
        AllowOrigin::any()
    } else {
        AllowOrigin::list(origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()))
    };
    CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE])
}

pub fn app(state: Arc<AppState>) -> Router {
    let layer = cors(&state.config.cors_origins);
    let static_dir = state.config.static_dir.clone();
    let router = Router::new()
        .route("/api/pair", get(get_pair))
        .route("/api/vote", post(post_vote))
        .route("/api/leaderboard", get(get_leaderboard))
        .with_state(state);
    let router = match static_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    };
    router.layer(layer)
}

/// Flags shared by the standalone binary and `mdaware serve`.
#[derive(Debug, Clone, clap::Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Run directory holding responses.jsonl (and optionally tasks.jsonl).
    #[arg(long)]
    pub responses_dir: PathBuf,
    /// Vote log; defaults to votes.jsonl inside the responses directory.
    #[arg(long)]
    pub votes_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1800)]
    pub ticket_ttl_secs: u64,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap_rounds: usize,
    /// Recompute confidence intervals every N votes.
    #[arg(long, default_value_t = 10)]
    pub ci_every: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Allowed CORS origin; repeat for several. Any origin when omitted.
    #[arg(long = "cors-origin")]
    pub cors_origins: Vec<String>,
    /// Serve a built UI bundle from this directory.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

impl ServeArgs {
    pub fn config(&self) -> ServiceConfig {
        ServiceConfig {
            ticket_ttl: Duration::from_secs(self.ticket_ttl_secs),
            elo: EloConfig {
                bootstrap_rounds: self.bootstrap_rounds,
                rng_seed: self.seed.unwrap_or(0),
                ..EloConfig::default()
            },
            ci_every: self.ci_every,
            seed: self.seed,
            cors_origins: self.cors_origins.clone(),
            static_dir: self.static_dir.clone(),
        }
    }

    pub fn votes_path(&self) -> PathBuf {
        self.votes_out
            .clone()
            .unwrap_or_else(|| self.responses_dir.join(VOTES_FILE))
    }
}

pub async fn run(args: ServeArgs) -> anyhow::Result<()> {
    let catalog = Catalog::load(&args.responses_dir)?;
    if !catalog.is_servable() {
        tracing::warn!("no task has two or more models; /api/pair will answer 409");
    }
    let state = Arc::new(AppState::new(catalog, args.votes_path(), args.config())?);
    let addr: SocketAddr = format!("{}:{}", args.host, args.port).parse()?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(
        %addr,
        tasks = state.catalog().tasks.len(),
        models = state.catalog().models.len(),
        votes = %state.votes_path().display(),
        "vote service listening"
    );
    axum::serve(listener, app(state)).await?;
    Ok(())
}
