//! Training system: episode buffer and policy server, rollout workers,
//! sync and async trainers, evaluation, PSRO and league pipelines.

mod buffer;
mod distributed;
mod eval;
mod oracle;
mod pipeline;
pub mod run;

pub use buffer::{BufferConfig, BufferStats, EpisodeBuffer, PolicyServer, Published};
pub use distributed::{run_rollout_worker, sample_opponent, train_distributed, DistConfig, DistReport, Mode, RolloutTask};
pub use eval::{evaluate, evaluate_with_replays, EvalResult};
pub use oracle::{Arena, ArenaResult, BestResponseOracle, ExactOracle, MatrixArena, OracleReport, PitchArena, TabularOracle};
pub use pipeline::{
    run_league, run_psro, LeagueConfig, LeagueGeneration, LeagueReport, PsroConfig, PsroGeneration, PsroReport,
};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::Replay;
use crate::learner::{LearnerError, Policy};
use crate::metagame::{EloGame, EloTable, MetagameError, PayoffTable, ELO_K};

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Metagame(#[from] MetagameError),
    #[error("trainer starved: no episode within {0:?}")]
    Starvation(std::time::Duration),
    #[error("config: {0}")]
    Config(String),
    #[error("population: {0}")]
    Population(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberRole {
    BuiltIn,
    BestResponse,
    MainAgent,
    Exploiter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub id: String,
    pub role: MemberRole,
    pub generation: usize,
    pub policy: Arc<Policy>,
}

/// Policies, their pairwise results and the game log behind Elo ratings.
#[derive(Debug, Clone, Default)]
pub struct Population {
    pub members: Vec<Member>,
    pub payoff: PayoffTable<f64>,
    pub games: Vec<EloGame<f64>>,
    /// Replays kept from simulations, keyed by (a, b).
    pub replays: Vec<(String, String, Replay)>,
    clock: u64,
}

impl Population {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.members.iter().map(|m| m.id.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Member> {
        self.members.iter().find(|m| m.id == id)
    }

    /// Next generation index for `role`, counting from 1.
    pub fn next_generation(&self, role: MemberRole) -> usize {
        self.members.iter().filter(|m| m.role == role).count() + 1
    }

    /// Adds a member without simulating it.
    pub fn add(&mut self, policy: Policy, role: MemberRole) -> Result<&Member, OrchestratorError> {
        let id = policy.id.clone();
        if self.get(&id).is_some() {
            return Err(OrchestratorError::Population(format!("duplicate id {id}")));
        }
        self.payoff.add_policy(&id)?;
        let generation = self.next_generation(role);
        self.members.push(Member { id, role, generation, policy: Arc::new(policy) });
        Ok(self.members.last().expect("just pushed"))
    }

    /// Simulates `a` against `b` and records the result.
    pub fn simulate(&mut self, arena: &mut dyn Arena, a: &str, b: &str, episodes: u64, seed: u64) -> Result<(), OrchestratorError> {
        let pa = self.get(a).ok_or_else(|| OrchestratorError::Population(format!("unknown {a}")))?.policy.clone();
        let pb = self.get(b).ok_or_else(|| OrchestratorError::Population(format!("unknown {b}")))?.policy.clone();
        let r = arena.play(&pa, &pb, episodes, seed)?;
        self.payoff.record(a, b, &r.outcome)?;
        self.clock += 1;
        for s in r.scores {
            self.games.push(EloGame { timestamp: self.clock, a: a.to_string(), b: b.to_string(), score_a: s });
        }
        for rep in r.replays {
            self.replays.push((a.to_string(), b.to_string(), rep));
        }
        Ok(())
    }

    /// Simulates `id` against every member, itself included.
    pub fn simulate_against_all(&mut self, arena: &mut dyn Arena, id: &str, episodes: u64, seed: u64) -> Result<(), OrchestratorError> {
        for (k, other) in self.ids().into_iter().enumerate() {
            self.simulate(arena, id, &other, episodes, crate::rng::mix(&[seed, k as u64]))?;
        }
        Ok(())
    }

    /// Fills every pair (including self-play) not yet played.
    pub fn fill_payoff(&mut self, arena: &mut dyn Arena, episodes: u64, seed: u64) -> Result<(), OrchestratorError> {
        let ids = self.ids();
        for (i, a) in ids.iter().enumerate() {
            for (j, b) in ids.iter().enumerate().skip(i) {
                if self.payoff.entry(a, b)?.games == 0 {
                    self.simulate(arena, a, b, episodes, crate::rng::mix(&[seed, i as u64, j as u64]))?;
                }
            }
        }
        Ok(())
    }

    /// Sequential Elo over the game log.
    pub fn elo(&self, tie_seed: u64) -> EloTable<f64> {
        let mut t = EloTable::from_log(&self.games, ELO_K, tie_seed);
        for m in &self.members {
            t.add(&m.id);
        }
        t
    }

    /// Manifest rows: id, role, generation, policy version.
    pub fn manifest(&self) -> Vec<serde_json::Value> {
        self.members
            .iter()
            .map(|m| {
                serde_json::json!({
                    "id": m.id,
                    "role": m.role,
                    "generation": m.generation,
                    "version": m.policy.version,
                    "kind": m.policy.kind.name(),
                })
            })
            .collect()
    }
}
