//! Local leaderboard: policy submissions, Swiss-system rounds with weighted
//! score accumulation, Elo, and an HTTP API over an append-only match log.

pub mod http;
mod service;
mod state;
mod swiss;

pub use service::{read_log, rebuild_from_log, MatchStats, RankingService, Scenario, ServiceConfig};
pub use state::{Event, MatchRecord, Pairing, RankEntry, RoundResult, Standing, State, Submission, SubmissionStatus};
pub use swiss::swiss_pairings;

pub const SERVICE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum RankingError {
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("artifact for scenario {scenario:?} has env fingerprint {got}, expected {expected}")]
    Fingerprint { scenario: String, expected: String, got: String },
    #[error("malformed artifact: {0}")]
    Artifact(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("a round needs at least 2 submissions, found {0}")]
    TooFew(usize),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("corrupt data: {0}")]
    Corrupt(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
