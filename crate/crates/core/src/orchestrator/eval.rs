use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::analysis::Replay;
use crate::game::pitch::PitchConfig;
use crate::game::Team;
use crate::learner::{play_episode, Actor, EpisodeSettings, Policy};
use crate::metagame::MatchOutcome;
use crate::rewards::RewardConfig;
use crate::rng::mix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub win_rate: f64,
    pub draw_rate: f64,
    pub loss_rate: f64,
    pub mean_goal_diff: f64,
    pub outcome: MatchOutcome<f64>,
    /// Goal difference of every episode, from `a`'s side.
    pub goal_diffs: Vec<i64>,
}

/// Plays `episodes` greedy episodes of `a` against `b`; `a` takes the left
/// side in even episodes and the right side in odd ones. Replays are kept
/// for the first `keep_replays` episodes.
pub fn evaluate_with_replays(
    a: &Arc<Policy>,
    b: &Arc<Policy>,
    episodes: u64,
    config: &PitchConfig,
    seed: u64,
    keep_replays: usize,
) -> Result<(EvalResult, Vec<Replay>), OrchestratorError> {
    if episodes == 0 {
        return Err(OrchestratorError::Config("evaluation needs at least one episode".into()));
    }
    let mut outcome = MatchOutcome::<f64>::default();
    let mut replays = Vec::new();
    let mut goal_diffs = Vec::with_capacity(episodes as usize);
    for e in 0..episodes {
        let team = if e % 2 == 0 { Team::Left } else { Team::Right };
        // Paired episodes share a seed so side swaps cancel seat effects.
        let s = mix(&[seed, e / 2]);
        let mut x = Actor::new(a.clone(), config, 0.0, s)?;
        let mut y = Actor::new(b.clone(), config, 0.0, s ^ 1)?;
        let settings = EpisodeSettings {
            config: config.clone(),
            learner_team: team,
            seed: s,
            reward: RewardConfig::sparse(),
            step_latency: None,
        };
        let (ep, replay) = play_episode(&mut x, &mut y, &settings)?;
        let gd = i64::from(ep.goals.0) - i64::from(ep.goals.1);
        goal_diffs.push(gd);
        outcome.merge(&MatchOutcome {
            wins: u64::from(gd > 0),
            draws: u64::from(gd == 0),
            losses: u64::from(gd < 0),
            goal_diff: gd as f64,
        });
        if replays.len() < keep_replays {
            replays.push(replay);
        }
    }
    let g = episodes as f64;
    Ok((
        EvalResult {
            win_rate: outcome.wins as f64 / g,
            draw_rate: outcome.draws as f64 / g,
            loss_rate: outcome.losses as f64 / g,
            mean_goal_diff: outcome.goal_diff / g,
            outcome,
            goal_diffs,
        },
        replays,
    ))
}

pub fn evaluate(a: &Arc<Policy>, b: &Arc<Policy>, episodes: u64, config: &PitchConfig, seed: u64) -> Result<EvalResult, OrchestratorError> {
    Ok(evaluate_with_replays(a, b, episodes, config, seed, 0)?.0)
}
