use std::collections::VecDeque;
use std::sync::Arc;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::play::{play_episode, random_side, Actor, Episode, EpisodeSettings};
use super::{LearnerError, Policy, PolicyKind, TabularPolicy};
use crate::features::ActionMask;
use crate::game::pitch::PitchConfig;
use crate::rewards::RewardConfig;
use crate::rng::{mix, seeded};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub gamma: f64,
    pub parameter_sharing: bool,
    pub step_budget: u64,
    /// Stop once the trailing `window` training episodes reach this win
    /// rate. Anything above 1 disables early stopping.
    pub target_win_rate: f64,
    pub window: usize,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epsilon_start: 0.2,
            epsilon_end: 0.02,
            gamma: 0.99,
            parameter_sharing: true,
            step_budget: 200_000,
            target_win_rate: 0.95,
            window: 100,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: &str| Err(LearnerError::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        for e in [self.epsilon_start, self.epsilon_end] {
            if !(0.0..=1.0).contains(&e) {
                return bad("epsilon must lie in [0, 1]");
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if self.target_win_rate.is_nan() || self.target_win_rate <= 0.0 {
            return bad("target win rate must be positive");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        Ok(())
    }

    /// Linear decay from `epsilon_start` to `epsilon_end` over the budget.
    pub fn epsilon(&self, step: u64) -> f64 {
        let t = if self.step_budget == 0 { 1.0 } else { (step as f64 / self.step_budget as f64).min(1.0) };
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}

/// Tabular Q-learning updates over finished episodes.
#[derive(Debug, Clone)]
pub struct QLearner {
    pub learning_rate: f64,
    pub gamma: f64,
    pub updates: u64,
}

impl QLearner {
    pub fn new(learning_rate: f64, gamma: f64) -> Self {
        Self { learning_rate, gamma, updates: 0 }
    }

    /// One-step Q-learning backups, each agent's steps swept last to first.
    pub fn update_episode(&mut self, table: &mut TabularPolicy, episode: &Episode) {
        for (a, steps) in episode.transitions.iter().enumerate() {
            for t in steps.iter().rev() {
                let q = table.table_mut(a);
                let future = t.next.map_or(0.0, |(key, bits)| q.max_value(key, &ActionMask::from_bits(bits)));
                q.update(t.key, usize::from(t.action), t.reward + self.gamma * future, self.learning_rate);
                self.updates += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub env_steps: u64,
    pub episodes: u64,
    pub updates: u64,
    /// Win rate over the trailing window of training episodes.
    pub win_rate: f64,
    pub stopped_early: bool,
    /// `(env steps, trailing win rate, seconds since start)` after each
    /// episode.
    pub metrics: Vec<(u64, f64, f64)>,
    /// Training episodes per opponent id.
    pub opponents: std::collections::BTreeMap<String, u64>,
}

/// Starting table for a new best response: the prior's table when it is
/// tabular, else empty.
pub(crate) fn initial_table(prior: Option<&Policy>, lc: &LearnerConfig, agents: usize) -> Result<TabularPolicy, LearnerError> {
    match prior.map(|p| &p.kind) {
        Some(PolicyKind::Tabular(t)) => {
            if t.shared != lc.parameter_sharing {
                return Err(LearnerError::Incompatible("prior policy uses a different table layout".into()));
            }
            if !t.shared && t.tables.len() != agents {
                return Err(LearnerError::Incompatible(format!("prior has {} tables for {agents} agents", t.tables.len())));
            }
            Ok(t.clone())
        }
        _ => Ok(TabularPolicy::new(lc.parameter_sharing, agents)),
    }
}

/// Serial best-response training: epsilon-greedy tabular Q-learning
/// against an opponent drawn afresh for every episode, on a random side.
pub fn train_best_response(
    config: &PitchConfig,
    opponents: &mut dyn FnMut(&mut ChaCha8Rng) -> Arc<Policy>,
    lc: &LearnerConfig,
    reward: &RewardConfig,
    prior: Option<&Policy>,
    id: &str,
) -> Result<(Policy, TrainReport), LearnerError> {
    lc.validate()?;
    reward.validate().map_err(|e| LearnerError::Config(e.to_string()))?;
    if lc.step_budget == 0 {
        return match prior {
            Some(p) => Ok((p.clone(), TrainReport::default())),
            None => Err(LearnerError::Config("step budget 0 and no prior policy".into())),
        };
    }
    let agents = config.controlled().len();
    let mut current = Arc::new(Policy {
        id: id.to_string(),
        version: prior.map_or(1, |p| p.version + 1),
        kind: PolicyKind::Tabular(initial_table(prior, lc, agents)?),
        env_fingerprint: Some(config.fingerprint()),
    });
    let mut learner = QLearner::new(lc.learning_rate, lc.gamma);
    let mut rng = seeded(&[lc.seed, 0x7a1]);
    let mut report = TrainReport::default();
    let mut recent: VecDeque<bool> = VecDeque::new();
    let start = Instant::now();
    while report.env_steps < lc.step_budget {
        let opponent = opponents(&mut rng);
        let seed = mix(&[lc.seed, report.episodes]);
        let settings = EpisodeSettings {
            config: config.clone(),
            learner_team: random_side(&mut rng),
            seed,
            reward: reward.clone(),
            step_latency: None,
        };
        let epsilon = lc.epsilon(report.env_steps);
        *report.opponents.entry(opponent.id.clone()).or_default() += 1;
        let (episode, _) = {
            let mut me = Actor::new(current.clone(), config, epsilon, seed)?;
            let mut them = Actor::new(opponent, config, 0.0, seed ^ 1)?;
            play_episode(&mut me, &mut them, &settings)?
        };
        let PolicyKind::Tabular(table) = &mut Arc::make_mut(&mut current).kind else {
            unreachable!("learner policy is tabular")
        };
        learner.update_episode(table, &episode);
        report.env_steps += episode.steps as u64;
        report.episodes += 1;
        recent.push_back(episode.won());
        if recent.len() > lc.window {
            recent.pop_front();
        }
        report.win_rate = recent.iter().filter(|&&w| w).count() as f64 / recent.len() as f64;
        report.metrics.push((report.env_steps, report.win_rate, start.elapsed().as_secs_f64()));
        if recent.len() == lc.window && report.win_rate >= lc.target_win_rate {
            report.stopped_early = true;
            break;
        }
    }
    report.updates = learner.updates;
    Ok((Arc::unwrap_or_clone(current), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::{ScriptedKind, Transition};

    #[test]
    fn config_validation_and_decay() {
        let c = LearnerConfig { step_budget: 100, ..LearnerConfig::default() };
        assert!(c.validate().is_ok());
        assert_eq!(c.epsilon(0), 0.2);
        assert!((c.epsilon(50) - 0.11).abs() < 1e-12);
        assert!((c.epsilon(500) - 0.02).abs() < 1e-12);
        assert!(LearnerConfig { learning_rate: 0.0, ..c.clone() }.validate().is_err());
        assert!(LearnerConfig { epsilon_start: 1.5, ..c }.validate().is_err());
    }

    #[test]
    fn zero_budget_returns_prior() {
        let prior = Policy::scripted("p", ScriptedKind::Idle);
        let lc = LearnerConfig { step_budget: 0, ..LearnerConfig::default() };
        let mut opp = |_: &mut ChaCha8Rng| Arc::new(Policy::scripted("o", ScriptedKind::Idle));
        let (p, r) = train_best_response(&PitchConfig::one_v_one(10), &mut opp, &lc, &RewardConfig::dense(), Some(&prior), "x").unwrap();
        assert_eq!(p, prior);
        assert_eq!(r.episodes, 0);
        assert!(train_best_response(&PitchConfig::one_v_one(10), &mut opp, &lc, &RewardConfig::dense(), None, "x").is_err());
    }

    /// Two-state MDP: from s0, action 1 pays 1 and moves to s1, action 0
    /// pays 0 and stays; s1 is terminal after action 0 paying 2.
    #[test]
    fn q_learning_matches_value_iteration() {
        let gamma = 0.9;
        let all = ActionMask::all().bits();
        let episode = |path: &[(u64, u8, f64)]| Episode {
            policy_version: 0,
            opponent_id: String::new(),
            learner_team: crate::game::Team::Left,
            seed: 0,
            transitions: vec![path
                .iter()
                .enumerate()
                .map(|(i, &(key, action, reward))| Transition { key, action, reward, next: path.get(i + 1).map(|n| (n.0, all)) })
                .collect()],
            goals: (0, 0),
            steps: path.len(),
        };
        let mut table = TabularPolicy::new(true, 1);
        let mut q = QLearner::new(0.1, gamma);
        for _ in 0..3000 {
            q.update_episode(&mut table, &episode(&[(0, 1, 1.0), (1, 0, 2.0)]));
            q.update_episode(&mut table, &episode(&[(0, 0, 0.0), (0, 1, 1.0), (1, 0, 2.0)]));
        }
        // Value iteration on the same model restricted to actions 0 and 1.
        let (mut v0, mut v1) = (0.0f64, 0.0f64);
        for _ in 0..1000 {
            v1 = 2.0;
            v0 = (gamma * v0).max(1.0 + gamma * v1);
        }
        let t = table.table(0);
        assert!((t.values(0)[1] - (1.0 + gamma * v1)).abs() < 1e-3);
        assert!((t.values(0)[0] - gamma * v0).abs() < 1e-3);
        assert!((t.values(1)[0] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn shared_table_is_order_independent_of_writer_identity() {
        let ep = |a: u64| Episode {
            policy_version: 0,
            opponent_id: String::new(),
            learner_team: crate::game::Team::Left,
            seed: 0,
            transitions: vec![
                vec![Transition { key: a, action: 2, reward: 1.0, next: None }],
                vec![Transition { key: a + 1, action: 3, reward: -1.0, next: None }],
            ],
            goals: (0, 0),
            steps: 1,
        };
        let mut t1 = TabularPolicy::new(true, 2);
        let mut t2 = TabularPolicy::new(true, 2);
        let mut q = QLearner::new(0.1, 0.9);
        q.update_episode(&mut t1, &ep(10));
        q.update_episode(&mut t2, &ep(10));
        assert_eq!(serde_json::to_string(&t1).unwrap(), serde_json::to_string(&t2).unwrap());
        assert_eq!(t1.tables.len(), 1);
        assert_eq!(t1.table(0).len(), 2);
    }
}
