//! Replays, match decomposition into subgames, chains and nodes, event
//! counts and style statistics.

mod decompose;
mod replay;
mod style;

pub use decompose::{decompose, detect_events, Chain, EventCounts, MatchDecomposition, Node, Subgame};
pub use replay::{read_replay, read_replay_for, write_replay, Replay, ReplayError, ReplayHeader, StepRecord, REPLAY_FORMAT};
pub use style::{crossplay_from_outcomes, radar_csv, style_radar, CrossPlay, StyleMetrics, STYLE_METRICS};

use rand::Rng;

use crate::features::compute_action_mask;
use crate::game::pitch::{MiniPitch, PitchConfig};
use crate::game::Team;
use crate::rng::seeded;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("step {step}: {message}")]
    Ownership { step: u32, message: String },
}

/// Plays one episode with uniformly random legal actions on both sides and
/// records it.
pub fn record_random_episode(config: &PitchConfig, seed: u64) -> Replay {
    let mut env = MiniPitch::new(config.clone()).expect("valid config");
    let mut rng = seeded(&[seed, 0x5e1f]);
    let mut replay = Replay::new(ReplayHeader::new(config, "random", "random", seed));
    let mut state = env.reset(seed);
    let controlled = config.controlled();
    while !env.is_terminal() {
        let mut actions: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for team in Team::BOTH {
            let view = state.view_for(team);
            for &agent in &controlled {
                let mask = compute_action_mask(&view, agent, config).expect("controlled agent");
                let allowed: Vec<usize> = mask.allowed_actions().map(|a| a.index()).collect();
                actions[team.index()].push(allowed[rng.random_range(0..allowed.len())]);
            }
        }
        let out = env.step(&actions[0], &actions[1]).expect("legal step");
        replay.push(StepRecord {
            step: state.step_index,
            state,
            actions,
            rewards: [0.0, 0.0],
            events: out.events,
        });
        state = out.observation;
    }
    replay.final_state = Some(state);
    replay
}
