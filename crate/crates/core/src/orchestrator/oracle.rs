use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::distributed::{train_distributed, DistConfig};
use super::eval::evaluate_with_replays;
use super::OrchestratorError;
use crate::analysis::Replay;
use crate::game::pitch::PitchConfig;
use crate::game::MatrixGame;
use crate::learner::{best_response_exact, LearnerConfig, Policy, PolicyKind};
use crate::metagame::{MatchOutcome, MixedStrategy};
use crate::rewards::RewardConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub env_steps: u64,
    pub samples: u64,
    pub win_rate: f64,
    pub wall_clock_secs: f64,
    /// `(env steps, trailing win rate, seconds)` during training.
    pub metrics: Vec<(u64, f64, f64)>,
    /// Training episodes per opponent id.
    pub opponents: BTreeMap<String, u64>,
}

/// Produces a policy that best responds to a weighted set of opponents.
pub trait BestResponseOracle {
    fn best_response(
        &mut self,
        opponents: &[(Arc<Policy>, f64)],
        prior: Option<&Policy>,
        id: &str,
        seed: u64,
    ) -> Result<(Policy, OracleReport), OrchestratorError>;
}

/// Result of a batch of games from the first policy's side.
#[derive(Debug, Clone, Default)]
pub struct ArenaResult {
    pub outcome: MatchOutcome<f64>,
    /// Per-game score of the first policy: 1, 0.5 or 0.
    pub scores: Vec<f64>,
    pub replays: Vec<Replay>,
}

/// Plays policies against each other.
pub trait Arena {
    fn play(&mut self, a: &Arc<Policy>, b: &Arc<Policy>, episodes: u64, seed: u64) -> Result<ArenaResult, OrchestratorError>;
}

fn matrix_mix(policy: &Policy, n: usize) -> Result<&[f64], OrchestratorError> {
    match &policy.kind {
        PolicyKind::MatrixMixed(p) if p.len() == n => Ok(p),
        _ => Err(OrchestratorError::Population(format!("{} is not a strategy of this game", policy.id))),
    }
}

/// Exact best responses in a symmetric matrix game.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    pub game: MatrixGame<f64>,
}

impl BestResponseOracle for ExactOracle {
    fn best_response(
        &mut self,
        opponents: &[(Arc<Policy>, f64)],
        _prior: Option<&Policy>,
        id: &str,
        _seed: u64,
    ) -> Result<(Policy, OracleReport), OrchestratorError> {
        let n = self.game.cols();
        let mut weights = vec![0.0; n];
        for (p, w) in opponents {
            for (acc, x) in weights.iter_mut().zip(matrix_mix(p, n)?) {
                *acc += w * x;
            }
        }
        let mix = MixedStrategy::from_weights(&weights)?;
        let row = best_response_exact(&self.game, &mix)?;
        let opponents = opponents.iter().filter(|(_, w)| *w > 0.0).map(|(p, _)| (p.id.clone(), 1)).collect();
        Ok((Policy::pure(id, self.game.rows(), row), OracleReport { opponents, ..OracleReport::default() }))
    }
}

/// Expected payoffs of mixed strategies; the outcome of a batch records
/// the sign of the expected payoff and `goal_diff = payoff * episodes`.
#[derive(Debug, Clone)]
pub struct MatrixArena {
    pub game: MatrixGame<f64>,
}

impl Arena for MatrixArena {
    fn play(&mut self, a: &Arc<Policy>, b: &Arc<Policy>, episodes: u64, _seed: u64) -> Result<ArenaResult, OrchestratorError> {
        let (x, y) = (matrix_mix(a, self.game.rows())?, matrix_mix(b, self.game.cols())?);
        let v: f64 = self
            .game
            .payoff()
            .iter()
            .zip(x)
            .map(|(row, &p)| p * row.iter().zip(y).map(|(&u, &q)| u * q).sum::<f64>())
            .sum();
        let score = if v > 0.0 { 1.0 } else if v < 0.0 { 0.0 } else { 0.5 };
        Ok(ArenaResult {
            outcome: MatchOutcome {
                wins: if v > 0.0 { episodes } else { 0 },
                draws: if v == 0.0 { episodes } else { 0 },
                losses: if v < 0.0 { episodes } else { 0 },
                goal_diff: v * episodes as f64,
            },
            scores: vec![score; episodes as usize],
            replays: Vec::new(),
        })
    }
}

/// Tabular Q-learning best responses in MiniPitch.
#[derive(Debug, Clone)]
pub struct TabularOracle {
    pub config: PitchConfig,
    pub learner: LearnerConfig,
    pub reward: RewardConfig,
    pub dist: DistConfig,
}

impl BestResponseOracle for TabularOracle {
    fn best_response(
        &mut self,
        opponents: &[(Arc<Policy>, f64)],
        prior: Option<&Policy>,
        id: &str,
        seed: u64,
    ) -> Result<(Policy, OracleReport), OrchestratorError> {
        let lc = LearnerConfig { seed, ..self.learner.clone() };
        let (p, r) = train_distributed(&self.config, opponents, &lc, &self.reward, prior, id, &self.dist)?;
        Ok((
            p,
            OracleReport {
                env_steps: r.train.env_steps,
                samples: r.samples_consumed,
                win_rate: r.train.win_rate,
                wall_clock_secs: r.wall_clock_secs,
                metrics: r.train.metrics,
                opponents: r.train.opponents,
            },
        ))
    }
}

/// Greedy MiniPitch games with side swaps.
#[derive(Debug, Clone)]
pub struct PitchArena {
    pub config: PitchConfig,
    /// Replays kept per batch.
    pub keep_replays: usize,
}

impl Arena for PitchArena {
    fn play(&mut self, a: &Arc<Policy>, b: &Arc<Policy>, episodes: u64, seed: u64) -> Result<ArenaResult, OrchestratorError> {
        let (r, replays) = evaluate_with_replays(a, b, episodes, &self.config, seed, self.keep_replays)?;
        let scores = r
            .goal_diffs
            .iter()
            .map(|&gd| match gd.signum() {
                1 => 1.0,
                0 => 0.5,
                _ => 0.0,
            })
            .collect();
        Ok(ArenaResult { outcome: r.outcome, scores, replays })
    }
}
