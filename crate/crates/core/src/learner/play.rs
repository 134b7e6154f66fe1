use std::collections::VecDeque;
use std::sync::Arc;
use std::time::Duration;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tabular::{act_preferences, state_key, StateKey};
use super::{LearnerError, Policy, PolicyKind, ScriptedKind};
use crate::analysis::{decompose, Replay, ReplayHeader, StepRecord};
use crate::features::{ActionMask, Encoder};
use crate::game::pitch::{bots, MiniPitch, PitchConfig, RawObservation};
use crate::game::Team;
use crate::rewards::{episode_rewards, RewardConfig};
use crate::rng::seeded;

/// One agent decision kept for learning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub key: StateKey,
    pub action: u8,
    pub reward: f64,
    /// Next state key and its action mask bits; `None` at the episode end.
    pub next: Option<(StateKey, u32)>,
}

/// A finished episode seen from the learning side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub policy_version: u64,
    pub opponent_id: String,
    pub learner_team: Team,
    pub seed: u64,
    /// One transition list per controlled agent.
    pub transitions: Vec<Vec<Transition>>,
    /// Goals for and against the learner.
    pub goals: (u32, u32),
    pub steps: usize,
}

impl Episode {
    pub fn won(&self) -> bool {
        self.goals.0 > self.goals.1
    }

    pub fn samples(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Decision {
    action: usize,
    key: StateKey,
    mask: ActionMask,
}

/// Plays one policy for one team.
#[derive(Debug, Clone)]
pub struct Actor {
    policy: Arc<Policy>,
    encoder: Encoder,
    epsilon: f64,
    history: VecDeque<RawObservation>,
    rng: ChaCha8Rng,
}

impl Actor {
    pub fn new(policy: Arc<Policy>, config: &PitchConfig, epsilon: f64, seed: u64) -> Result<Self, LearnerError> {
        let agents = config.controlled().len();
        match &policy.kind {
            PolicyKind::MatrixMixed(_) => {
                return Err(LearnerError::Incompatible(format!("{} is a matrix-game policy", policy.id)));
            }
            PolicyKind::Tabular(t) if !t.shared && t.tables.len() != agents => {
                return Err(LearnerError::Incompatible(format!(
                    "{} has {} tables for {agents} agents",
                    policy.id,
                    t.tables.len()
                )));
            }
            _ => {}
        }
        if let Some(fp) = &policy.env_fingerprint {
            if *fp != config.fingerprint() {
                return Err(LearnerError::Incompatible(format!("{} was built for {fp}", policy.id)));
            }
        }
        Ok(Self { policy, encoder: Encoder::new(config), epsilon, history: VecDeque::new(), rng: seeded(&[seed, 0xac7]) })
    }

    pub fn policy(&self) -> &Arc<Policy> {
        &self.policy
    }

    pub fn reset(&mut self, seed: u64) {
        self.history.clear();
        self.rng = seeded(&[seed, 0xac7]);
    }

    fn decide(&mut self, view: &RawObservation) -> Vec<Decision> {
        let config = self.encoder.config().clone();
        let agents = config.controlled();
        let masks: Vec<ActionMask> =
            agents.iter().map(|&i| self.encoder.action_mask(view, i).expect("controlled agent")).collect();
        let scripted = |actions: Vec<usize>| -> Vec<Decision> {
            actions.into_iter().zip(&masks).map(|(action, &mask)| Decision { action, key: 0, mask }).collect()
        };
        match &self.policy.kind {
            PolicyKind::Scripted(ScriptedKind::Idle) => scripted(vec![0; agents.len()]),
            PolicyKind::Scripted(ScriptedKind::Random) => {
                let acts = masks.iter().map(|m| act_preferences(&[0.0; 19], m, 1.0, &mut self.rng)).collect();
                scripted(acts)
            }
            PolicyKind::Scripted(ScriptedKind::Shooter) => scripted(bots::shooter(view, &config)),
            PolicyKind::Scripted(ScriptedKind::BuiltIn { difficulty }) => {
                let delay = 2usize.saturating_sub(usize::from(*difficulty));
                self.history.push_back(view.clone());
                while self.history.len() > delay + 1 {
                    self.history.pop_front();
                }
                let seen = self.history.front().expect("just pushed").clone();
                scripted(bots::builtin(&seen, &config))
            }
            PolicyKind::Tabular(t) => {
                let mut out = Vec::with_capacity(agents.len());
                for (a, (&i, &mask)) in agents.iter().zip(&masks).enumerate() {
                    let fv = self.encoder.encode_complex(view, i).expect("controlled agent");
                    let key = state_key(&fv, config.width, config.height, t.shared);
                    let q = t.table(a).values(key);
                    let action = act_preferences(&q, &mask, self.epsilon, &mut self.rng);
                    out.push(Decision { action, key, mask });
                }
                out
            }
            PolicyKind::MatrixMixed(_) => unreachable!("rejected in Actor::new"),
        }
    }

    /// Actions for the controlled players given the team's own-frame view.
    pub fn act(&mut self, view: &RawObservation) -> Vec<usize> {
        self.decide(view).into_iter().map(|d| d.action).collect()
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeSettings {
    pub config: PitchConfig,
    pub learner_team: Team,
    pub seed: u64,
    pub reward: RewardConfig,
    /// Artificial delay after every environment step.
    pub step_latency: Option<Duration>,
}

/// Plays one episode between `learner` and `opponent` and returns the
/// learner's transitions along with the full replay.
pub fn play_episode(learner: &mut Actor, opponent: &mut Actor, s: &EpisodeSettings) -> Result<(Episode, Replay), LearnerError> {
    let config = &s.config;
    let mut env = MiniPitch::new(config.clone()).map_err(|e| LearnerError::Config(e.to_string()))?;
    learner.reset(s.seed);
    opponent.reset(s.seed.wrapping_add(0x9e37));
    let (left, right) = match s.learner_team {
        Team::Left => (&learner.policy.id, &opponent.policy.id),
        Team::Right => (&opponent.policy.id, &learner.policy.id),
    };
    let mut replay = Replay::new(ReplayHeader::new(config, left, right, s.seed));
    let mut state = env.reset(s.seed);
    let agents = config.controlled().len();
    let mut decisions: Vec<Vec<Decision>> = Vec::new();
    while !env.is_terminal() {
        let mine = learner.decide(&state.view_for(s.learner_team));
        let theirs = opponent.act(&state.view_for(s.learner_team.other()));
        let my_actions: Vec<usize> = mine.iter().map(|d| d.action).collect();
        let actions = match s.learner_team {
            Team::Left => [my_actions, theirs],
            Team::Right => [theirs, my_actions],
        };
        let out = env.step(&actions[0], &actions[1]).map_err(|e| LearnerError::Incompatible(e.to_string()))?;
        if let Some(d) = s.step_latency {
            std::thread::sleep(d);
        }
        decisions.push(mine);
        replay.push(StepRecord { step: state.step_index, state, actions, rewards: [0.0; 2], events: out.events });
        state = out.observation;
    }
    let goals = (state.goals(s.learner_team), state.goals(s.learner_team.other()));
    replay.final_state = Some(state);
    let d = decompose(&replay).map_err(|e| LearnerError::Invalid(e.to_string()))?;
    let mut team_rewards = [Vec::new(), Vec::new()];
    for team in Team::BOTH {
        team_rewards[team.index()] = episode_rewards(&replay, &d, team, &s.reward);
    }
    for (k, rec) in replay.steps.iter_mut().enumerate() {
        for team in Team::BOTH {
            let r = &team_rewards[team.index()][k];
            rec.rewards[team.index()] = r.iter().sum::<f64>() / r.len().max(1) as f64;
        }
    }
    let mine = &team_rewards[s.learner_team.index()];
    let steps = decisions.len();
    let transitions = (0..agents)
        .map(|a| {
            (0..steps)
                .map(|k| Transition {
                    key: decisions[k][a].key,
                    action: decisions[k][a].action as u8,
                    reward: mine[k][a],
                    next: decisions.get(k + 1).map(|n| (n[a].key, n[a].mask.bits())),
                })
                .collect()
        })
        .collect();
    let episode = Episode {
        policy_version: learner.policy.version,
        opponent_id: opponent.policy.id.clone(),
        learner_team: s.learner_team,
        seed: s.seed,
        transitions,
        goals,
        steps,
    };
    Ok((episode, replay))
}

pub(crate) fn random_side(rng: &mut impl Rng) -> Team {
    if rng.random::<bool>() {
        Team::Left
    } else {
        Team::Right
    }
}
