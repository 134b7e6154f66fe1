//! Population-based self-play for two-team zero-sum games.
//!
//! The crate bundles a deterministic gridworld football environment
//! ([`game::pitch`]), feature encoders and action masks ([`features`]),
//! reward shaping ([`rewards`]), best-response oracles ([`learner`]), the
//! empirical metagame ([`metagame`]), the actor-learner training system with
//! PSRO and league pipelines ([`orchestrator`]) and match analytics over
//! replay files ([`analysis`]).

pub mod analysis;
pub mod features;
pub mod game;
pub mod learner;
pub mod metagame;
pub mod orchestrator;
pub mod rewards;
pub mod rng;
pub mod scalar;

pub use game::{GameError, MarkovGameSpec, Team};
pub use scalar::Scalar;

/// Matrix game over `f64` payoffs.
pub type MatrixGameF64 = game::MatrixGame<f64>;
/// Matrix game over `f32` payoffs.
pub type MatrixGameF32 = game::MatrixGame<f32>;
