//! Two-team zero-sum Markov games.
//!
//! [`MarkovGameSpec`] describes the shape of a game (team size, per-agent
//! action count, discount, horizon). Two concrete environments implement it:
//! normal-form [`MatrixGame`]s for exact metagame checks and the [`pitch`]
//! gridworld football game.

pub mod matrix;
pub mod pitch;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matrix::MatrixGame;

/// Number of actions in the default football action set.
pub const ACTION_COUNT: usize = 19;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("action index {index} out of range (0..{count})")]
    ActionOutOfRange { index: usize, count: usize },
    #[error("expected {expected} actions for the {team:?} team, got {got}")]
    ActionCount { team: Team, expected: usize, got: usize },
    #[error("step called after the episode terminated")]
    StepAfterTerminal,
    #[error("strategy index ({row}, {col}) out of range for a {rows}x{cols} game")]
    StrategyOutOfRange { row: usize, col: usize, rows: usize, cols: usize },
    #[error("payoff matrix must be non-empty, rectangular and finite")]
    BadMatrix,
}

/// The two sides of every game in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Team {
    Left,
    Right,
}

impl Team {
    pub const BOTH: [Team; 2] = [Team::Left, Team::Right];

    pub fn other(self) -> Team {
        match self {
            Team::Left => Team::Right,
            Team::Right => Team::Left,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Team::Left => 0,
            Team::Right => 1,
        }
    }
}

/// Shape of a two-team Markov game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovGameSpec {
    pub agents_per_team: usize,
    pub actions_per_agent: usize,
    pub gamma: f64,
    pub horizon: u32,
}

impl MarkovGameSpec {
    pub const TEAM_COUNT: usize = 2;

    pub fn new(agents_per_team: usize, gamma: f64, horizon: u32) -> Result<Self, GameError> {
        let spec = Self {
            agents_per_team,
            actions_per_agent: ACTION_COUNT,
            gamma,
            horizon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.agents_per_team == 0 {
            return Err(GameError::InvalidConfig("agents_per_team must be >= 1".into()));
        }
        if self.actions_per_agent == 0 {
            return Err(GameError::InvalidConfig("actions_per_agent must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(GameError::InvalidConfig(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if self.horizon == 0 {
            return Err(GameError::InvalidConfig("horizon must be >= 1".into()));
        }
        Ok(())
    }

    /// Size of the joint action space of one team.
    pub fn joint_actions_per_team(&self) -> u128 {
        (self.actions_per_agent as u128).pow(self.agents_per_team as u32)
    }

    /// Discounted return of a reward sequence.
    pub fn discounted_return(&self, rewards: &[f64]) -> f64 {
        rewards
            .iter()
            .rev()
            .fold(0.0, |acc, r| r + self.gamma * acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(MarkovGameSpec::new(3, 0.99, 400).is_ok());
        assert!(MarkovGameSpec::new(0, 0.99, 400).is_err());
        assert!(MarkovGameSpec::new(1, 1.5, 400).is_err());
        assert!(MarkovGameSpec::new(1, 0.5, 0).is_err());
        assert_eq!(MarkovGameSpec::new(2, 0.5, 1).unwrap().joint_actions_per_team(), 361);
    }

    #[test]
    fn discounted_return_matches_direct_sum() {
        let spec = MarkovGameSpec::new(1, 0.9, 10).unwrap();
        let r = [1.0, 0.0, 2.0];
        assert!((spec.discounted_return(&r) - (1.0 + 0.81 * 2.0)).abs() < 1e-12);
    }
}
