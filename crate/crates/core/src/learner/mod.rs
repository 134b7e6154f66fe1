//! Best-response oracles: exact for matrix games, tabular Q-learning for
//! MiniPitch.

mod play;
mod tabular;
mod train;

pub use play::{play_episode, Actor, Episode, EpisodeSettings, Transition};
pub use tabular::{act_preferences, greedy, state_key, QTable, StateKey};
pub use train::{train_best_response, LearnerConfig, QLearner, TrainReport};
pub(crate) use play::random_side;
pub(crate) use train::initial_table;

use serde::{Deserialize, Serialize};

use crate::game::MatrixGame;
use crate::metagame::MixedStrategy;
use crate::scalar::Scalar;

pub const POLICY_FORMAT: &str = "pitchleague-policy/1";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LearnerError {
    #[error("opponent mix has {got} entries, game has {expected} columns")]
    Dimension { expected: usize, got: usize },
    #[error("incompatible policy: {0}")]
    Incompatible(String),
    #[error("invalid policy: {0}")]
    Invalid(String),
    #[error("artifact: {0}")]
    Artifact(String),
    #[error("learner config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedKind {
    Idle,
    /// Uniform over legal actions.
    Random,
    Shooter,
    /// Rule-based bot; lower difficulty reacts to older observations
    /// (2 - difficulty steps late).
    BuiltIn { difficulty: u8 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TabularPolicy {
    /// One table for all agents, keyed with the agent id.
    pub shared: bool,
    /// A single table when shared, else one per controlled agent.
    pub tables: Vec<QTable>,
}

impl TabularPolicy {
    pub fn new(shared: bool, agents: usize) -> Self {
        Self { shared, tables: vec![QTable::default(); if shared { 1 } else { agents }] }
    }

    pub fn table(&self, agent: usize) -> &QTable {
        &self.tables[if self.shared { 0 } else { agent }]
    }

    pub fn table_mut(&mut self, agent: usize) -> &mut QTable {
        &mut self.tables[if self.shared { 0 } else { agent }]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Scripted(ScriptedKind),
    Tabular(TabularPolicy),
    /// Mixed strategy over the rows of a matrix game.
    MatrixMixed(Vec<f64>),
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Scripted(_) => "scripted",
            PolicyKind::Tabular(_) => "tabular",
            PolicyKind::MatrixMixed(_) => "matrix_mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub id: String,
    pub version: u64,
    pub kind: PolicyKind,
    /// Environment the policy was trained for, if any.
    pub env_fingerprint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArtifactHeader {
    format: String,
    id: String,
    kind: String,
    version: u64,
    env_fingerprint: Option<String>,
}

impl Policy {
    pub fn scripted(id: &str, kind: ScriptedKind) -> Self {
        Self { id: id.to_string(), version: 0, kind: PolicyKind::Scripted(kind), env_fingerprint: None }
    }

    pub fn mixed(id: &str, probs: Vec<f64>) -> Result<Self, LearnerError> {
        let p = Self { id: id.to_string(), version: 0, kind: PolicyKind::MatrixMixed(probs), env_fingerprint: None };
        p.validate()?;
        Ok(p)
    }

    pub fn pure(id: &str, rows: usize, row: usize) -> Self {
        let mut probs = vec![0.0; rows];
        probs[row] = 1.0;
        Self { id: id.to_string(), version: 0, kind: PolicyKind::MatrixMixed(probs), env_fingerprint: None }
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        match &self.kind {
            PolicyKind::MatrixMixed(p) => {
                if p.is_empty() || p.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(LearnerError::Invalid(format!("{}: bad probabilities", self.id)));
                }
                if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(LearnerError::Invalid(format!("{}: probabilities do not sum to 1", self.id)));
                }
            }
            PolicyKind::Tabular(t) => {
                if t.tables.is_empty() || (t.shared && t.tables.len() != 1) {
                    return Err(LearnerError::Invalid(format!("{}: table layout", self.id)));
                }
                if !t.tables.iter().all(QTable::is_finite) {
                    return Err(LearnerError::Invalid(format!("{}: non-finite preferences", self.id)));
                }
            }
            PolicyKind::Scripted(_) => {}
        }
        Ok(())
    }

    /// Two JSON lines: a header (format, id, kind, version, env) and the
    /// policy body.
    pub fn to_artifact(&self) -> String {
        let header = ArtifactHeader {
            format: POLICY_FORMAT.to_string(),
            id: self.id.clone(),
            kind: self.kind.name().to_string(),
            version: self.version,
            env_fingerprint: self.env_fingerprint.clone(),
        };
        format!(
            "{}\n{}\n",
            serde_json::to_string(&header).expect("header serialises"),
            serde_json::to_string(&self.kind).expect("policy serialises")
        )
    }

    pub fn from_artifact(text: &str) -> Result<Self, LearnerError> {
        let bad = |m: String| LearnerError::Artifact(m);
        let mut lines = text.lines();
        let header: ArtifactHeader = serde_json::from_str(lines.next().ok_or_else(|| bad("empty artifact".into()))?)
            .map_err(|e| bad(format!("line 1: {e}")))?;
        if header.format != POLICY_FORMAT {
            return Err(bad(format!("unknown format {:?}", header.format)));
        }
        let kind: PolicyKind = serde_json::from_str(lines.next().ok_or_else(|| bad("missing body".into()))?)
            .map_err(|e| bad(format!("line 2: {e}")))?;
        if kind.name() != header.kind {
            return Err(bad(format!("header says {}, body is {}", header.kind, kind.name())));
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(bad("trailing data".into()));
        }
        let p = Policy { id: header.id, version: header.version, kind, env_fingerprint: header.env_fingerprint };
        p.validate()?;
        Ok(p)
    }
}

/// Row payoffs against `mix`, `A · mix`.
pub fn row_values<T: Scalar>(game: &MatrixGame<T>, mix: &MixedStrategy<T>) -> Result<Vec<T>, LearnerError> {
    if mix.len() != game.cols() {
        return Err(LearnerError::Dimension { expected: game.cols(), got: mix.len() });
    }
    Ok(crate::metagame::best_response_value(game.payoff(), mix.probs()))
}

/// Pure best response of the row player; ties go to the lowest row.
pub fn best_response_exact<T: Scalar>(game: &MatrixGame<T>, mix: &MixedStrategy<T>) -> Result<usize, LearnerError> {
    let v = row_values(game, mix)?;
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::MatrixGameF64;

    #[test]
    fn exact_best_responses() {
        let g = MatrixGameF64::rock_paper_scissors();
        assert_eq!(best_response_exact(&g, &MixedStrategy::pure(3, 0)).unwrap(), 1);
        assert_eq!(best_response_exact(&g, &MixedStrategy::uniform(3)).unwrap(), 0);
        let g = MatrixGameF64::new(vec![vec![0.0, 2.0], vec![1.0, 0.0]]).unwrap();
        let mix = MixedStrategy::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let v = row_values(&g, &mix).unwrap();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-12 && (v[1] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(best_response_exact(&g, &mix).unwrap(), 0);
        assert!(matches!(best_response_exact(&g, &MixedStrategy::uniform(3)), Err(LearnerError::Dimension { .. })));
    }

    #[test]
    fn artifact_round_trip() {
        let mut t = TabularPolicy::new(true, 2);
        t.tables[0].update(42, 3, 1.0, 0.1);
        let p = Policy { id: "br-1".into(), version: 3, kind: PolicyKind::Tabular(t), env_fingerprint: Some("minipitch-x".into()) };
        let text = p.to_artifact();
        assert!(text.starts_with("{\"format\":\"pitchleague-policy/1\",\"id\":\"br-1\",\"kind\":\"tabular\""));
        assert_eq!(Policy::from_artifact(&text).unwrap(), p);
        let s = Policy::scripted("bot", ScriptedKind::BuiltIn { difficulty: 1 });
        assert_eq!(Policy::from_artifact(&s.to_artifact()).unwrap(), s);
        let forged = text.replacen("\"tabular\"", "\"scripted\"", 1);
        assert!(Policy::from_artifact(&forged).is_err());
        assert!(Policy::from_artifact("").is_err());
    }

    #[test]
    fn mixed_policies_must_be_distributions() {
        assert!(Policy::mixed("m", vec![0.5, 0.5]).is_ok());
        assert!(Policy::mixed("m", vec![0.5, 0.6]).is_err());
        assert!(Policy::mixed("m", vec![-0.5, 1.5]).is_err());
    }
}
