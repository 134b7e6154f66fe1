//! Reward streams computed from a recorded episode.
//!
//! Every stream has one row per step and one column per controlled agent of
//! the team; entry `[k][a]` is the reward for the transition out of step `k`.

use serde::{Deserialize, Serialize};

use crate::analysis::{MatchDecomposition, Replay};
use crate::game::pitch::{Cell, Event, PitchConfig, PlayerRef, RawObservation, Role};
use crate::game::Team;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RewardError {
    #[error("coefficient for {0:?} is not finite")]
    NonFinite(Component),
    #[error("checkpoint_count must be at least 1")]
    NoCheckpoints,
    #[error("role weights must be finite")]
    RoleWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Scoring only.
    Sparse,
    /// Scoring plus checkpoints.
    #[default]
    Dense,
    /// Weighted sum of `components`.
    Composite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Scoring,
    Checkpoint,
    BallPlayerDistance,
    /// Final goal difference, paid on the last step only.
    GoalDifference,
    Possession,
    RoleBasedScoring,
    Passing,
    Assist,
}

/// `(scored, conceded)` multipliers for the role-based scoring component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleWeights {
    pub gk: (f64, f64),
    pub def: (f64, f64),
    pub mid: (f64, f64),
    pub fwd: (f64, f64),
}

impl Default for RoleWeights {
    fn default() -> Self {
        Self { gk: (0.5, 1.5), def: (0.5, 1.5), mid: (1.0, 1.0), fwd: (1.5, 0.5) }
    }
}

impl RoleWeights {
    pub fn get(&self, role: Role) -> (f64, f64) {
        match role {
            Role::GK => self.gk,
            Role::DEF => self.def,
            Role::MID => self.mid,
            Role::FWD => self.fwd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub scheme: Scheme,
    pub components: Vec<(Component, f64)>,
    pub role_weights: RoleWeights,
    pub checkpoint_count: usize,
    pub checkpoint_value: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Dense,
            components: Vec::new(),
            role_weights: RoleWeights::default(),
            checkpoint_count: 10,
            checkpoint_value: 0.1,
        }
    }
}

impl RewardConfig {
    pub fn sparse() -> Self {
        Self { scheme: Scheme::Sparse, ..Self::default() }
    }

    pub fn dense() -> Self {
        Self::default()
    }

    /// Scoring + 0.1 · ball-player distance + terminal goal difference.
    pub fn pressing() -> Self {
        Self {
            scheme: Scheme::Composite,
            components: vec![
                (Component::Scoring, 1.0),
                (Component::BallPlayerDistance, 0.1),
                (Component::GoalDifference, 1.0),
            ],
            ..Self::default()
        }
    }

    /// Role-based scoring + 0.3 · assist.
    pub fn roles_and_assists() -> Self {
        Self {
            scheme: Scheme::Composite,
            components: vec![(Component::RoleBasedScoring, 1.0), (Component::Assist, 0.3)],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        for &(c, w) in &self.components {
            if !w.is_finite() {
                return Err(RewardError::NonFinite(c));
            }
        }
        if self.checkpoint_count == 0 {
            return Err(RewardError::NoCheckpoints);
        }
        let w = self.role_weights;
        if [w.gk, w.def, w.mid, w.fwd].iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(RewardError::RoleWeights);
        }
        if !self.checkpoint_value.is_finite() {
            return Err(RewardError::NonFinite(Component::Checkpoint));
        }
        Ok(())
    }

    /// Weighted components the scheme sums.
    pub fn terms(&self) -> Vec<(Component, f64)> {
        match self.scheme {
            Scheme::Sparse => vec![(Component::Scoring, 1.0)],
            Scheme::Dense => vec![(Component::Scoring, 1.0), (Component::Checkpoint, 1.0)],
            Scheme::Composite => self.components.clone(),
        }
    }
}

/// +1 for each goal `team` scores in the step's events, -1 for each conceded.
pub fn scoring_reward(events: &[Event], team: Team) -> f64 {
    events
        .iter()
        .map(|e| match e {
            Event::Goal { team: t, .. } if *t == team => 1.0,
            Event::Goal { .. } => -1.0,
            _ => 0.0,
        })
        .sum()
}

/// Ball position in normalised coordinates of the team's own frame: x in
/// [-1, 1] towards the opponent goal, y in [-0.42, 0.42].
pub fn normalised(cell: Cell, config: &PitchConfig) -> (f64, f64) {
    let x = 2.0 * f64::from(cell.x) / f64::from(config.width) - 1.0;
    let y = (f64::from(cell.y) / f64::from(config.height) - 0.5) * 0.84;
    (x, y)
}

/// Number of checkpoint regions reached with the ball at `cell` (own
/// frame). Region `k` starts where the distance to the goal centre drops
/// below `0.99 - 0.8 k / count`.
pub fn checkpoint_regions(cell: Cell, config: &PitchConfig, count: usize) -> usize {
    let (x, y) = normalised(cell, config);
    let d = ((x - 1.0).powi(2) + y * y).sqrt();
    (0..count)
        .filter(|&k| d < 0.99 - 0.8 * k as f64 / count as f64)
        .count()
}

/// Team-level checkpoint stream over the states after each step. Each
/// region pays once per episode while the team owns the ball; a goal pays
/// every region not yet collected.
pub fn checkpoint_reward(after: &[RawObservation], events: &[Vec<Event>], team: Team, config: &PitchConfig, rc: &RewardConfig) -> Vec<f64> {
    let mut collected = 0;
    after
        .iter()
        .zip(events)
        .map(|(state, ev)| {
            let before = collected;
            if ev.iter().any(|e| matches!(e, Event::Goal { team: t, .. } if *t == team)) {
                collected = rc.checkpoint_count;
            } else if state.ball.owned_team == Some(team) {
                let view = state.view_for(team);
                collected = collected.max(checkpoint_regions(view.ball.position, config, rc.checkpoint_count));
            }
            (collected - before) as f64 * rc.checkpoint_value
        })
        .collect()
}

/// States after each step of the replay.
fn states_after(replay: &Replay) -> Vec<RawObservation> {
    (0..replay.steps.len())
        .map(|k| {
            replay
                .state_before(k + 1)
                .cloned()
                .unwrap_or_else(|| replay.steps[k].state.clone())
        })
        .collect()
}

/// One stream per component, `[k][agent]`.
pub fn component_stream(
    component: Component,
    replay: &Replay,
    decomposition: &MatchDecomposition,
    team: Team,
    rc: &RewardConfig,
) -> Vec<Vec<f64>> {
    let config = &replay.header.config;
    let agents = config.controlled();
    let steps = replay.steps.len();
    let mut out = vec![vec![0.0; agents.len()]; steps];
    let slot = |p: PlayerRef| (p.team == team).then(|| agents.iter().position(|&i| i == p.index)).flatten();
    let after = states_after(replay);
    match component {
        Component::Scoring => {
            for (k, rec) in replay.steps.iter().enumerate() {
                out[k].fill(scoring_reward(&rec.events, team));
            }
        }
        Component::Checkpoint => {
            let events: Vec<Vec<Event>> = replay.steps.iter().map(|r| r.events.clone()).collect();
            for (k, v) in checkpoint_reward(&after, &events, team, config, rc).into_iter().enumerate() {
                out[k].fill(v);
            }
        }
        Component::BallPlayerDistance => {
            for (k, state) in after.iter().enumerate() {
                let view = state.view_for(team);
                let (bx, by) = normalised(view.ball.position, config);
                for (a, &i) in agents.iter().enumerate() {
                    let (px, py) = normalised(view.players_left[i].position, config);
                    out[k][a] = -((px - bx).powi(2) + (py - by).powi(2)).sqrt();
                }
            }
        }
        Component::GoalDifference => {
            if let Some(last) = after.last() {
                let gd = f64::from(last.goals(team)) - f64::from(last.goals(team.other()));
                out[steps - 1].fill(gd);
            }
        }
        Component::Possession => {
            for (k, rec) in replay.steps.iter().enumerate() {
                let lost = rec.events.iter().any(|e| {
                    matches!(e, Event::OwnershipChange { player, previous: Some(t) } if *t == team && player.team != team)
                });
                if let (true, Some(a)) = (lost, rec.state.effective_owner().and_then(slot)) {
                    out[k][a] -= 1.0;
                }
            }
        }
        Component::RoleBasedScoring => {
            for (k, rec) in replay.steps.iter().enumerate() {
                for e in &rec.events {
                    if let Event::Goal { team: t, .. } = e {
                        for (a, &i) in agents.iter().enumerate() {
                            let (scored, conceded) = rc.role_weights.get(rec.state.team(team)[i].role);
                            out[k][a] += if *t == team { scored } else { -conceded };
                        }
                    }
                }
            }
        }
        Component::Passing => {
            for (s, passer, _) in decomposition.passes() {
                if let (Some(a), true) = (slot(passer), s >= 1) {
                    out[s as usize - 1][a] += 1.0;
                }
            }
        }
        Component::Assist => {
            for (s, helper) in decomposition.assists() {
                if let Some(a) = slot(helper) {
                    out[s as usize][a] += 1.0;
                }
            }
        }
    }
    out
}

/// The configured scheme's reward, `[k][agent]`.
pub fn episode_rewards(replay: &Replay, decomposition: &MatchDecomposition, team: Team, rc: &RewardConfig) -> Vec<Vec<f64>> {
    let n = replay.header.config.controlled().len();
    let mut total = vec![vec![0.0; n]; replay.steps.len()];
    for (c, w) in rc.terms() {
        for (row, add) in total.iter_mut().zip(component_stream(c, replay, decomposition, team, rc)) {
            for (x, y) in row.iter_mut().zip(add) {
                *x += w * y;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{decompose, record_random_episode, ReplayHeader, StepRecord};
    use crate::game::pitch::{MiniPitch, PitchConfig};

    fn goal(team: Team) -> Event {
        Event::Goal { team, scorer: PlayerRef::new(team, 0) }
    }

    #[test]
    fn scoring_signs() {
        assert_eq!(scoring_reward(&[goal(Team::Left)], Team::Left), 1.0);
        assert_eq!(scoring_reward(&[goal(Team::Left)], Team::Right), -1.0);
        assert_eq!(scoring_reward(&[], Team::Left), 0.0);
    }

    #[test]
    fn region_thresholds() {
        let c = PitchConfig::default();
        assert_eq!(checkpoint_regions(c.center(), &c, 10), 0);
        assert_eq!(checkpoint_regions(Cell::new(0, 4), &c, 10), 0);
        assert_eq!(checkpoint_regions(Cell::new(c.width, 4), &c, 10), 10);
        // x = 7 -> normalised 1/6, distance 5/6: regions with 0.99 - 0.08k > 5/6.
        let expect = (0..10).filter(|&k| 0.99 - 0.08 * k as f64 > 5.0 / 6.0).count();
        assert_eq!(checkpoint_regions(Cell::new(7, 4), &c, 10), expect);
    }

    /// A 1v1 run along the centre line: ball owned by Left moving one cell
    /// per step, goal at the end.
    fn carried_run() -> (Replay, Vec<f64>) {
        let config = PitchConfig::one_v_one(100);
        let mut env = MiniPitch::new(config.clone()).unwrap();
        let obs = env.reset(0);
        let mut r = Replay::new(ReplayHeader::new(&config, "a", "b", 0));
        let mut states = Vec::new();
        for x in 1..=config.width {
            let mut s = obs.clone();
            s.step_index = (x - 1) as u32;
            s.ball.position = Cell::new(x - 1, 4);
            s.players_left[0].position = s.ball.position;
            states.push(s);
        }
        for (k, s) in states.iter().enumerate() {
            let events = if k + 1 == states.len() { vec![goal(Team::Left)] } else { vec![] };
            r.push(StepRecord { step: k as u32, state: s.clone(), actions: [vec![0], vec![0]], rewards: [0.0; 2], events });
        }
        let mut last = states.last().unwrap().clone();
        last.score = (1, 0);
        r.final_state = Some(last);
        let expected: Vec<f64> = (0..states.len())
            .map(|k| {
                if k + 1 == states.len() {
                    let have = checkpoint_regions(states[k].ball.position, &config, 10);
                    (10 - have) as f64 * 0.1
                } else {
                    let now = checkpoint_regions(states[k + 1].ball.position, &config, 10);
                    let before = checkpoint_regions(states[k].ball.position, &config, 10);
                    (now - before) as f64 * 0.1
                }
            })
            .collect();
        (r, expected)
    }

    #[test]
    fn full_run_pays_two() {
        let (r, expected) = carried_run();
        let d = decompose(&r).unwrap();
        let dense = episode_rewards(&r, &d, Team::Left, &RewardConfig::dense());
        let total: f64 = dense.iter().map(|v| v[0]).sum();
        assert!((total - 2.0).abs() < 1e-9, "{total}");
        let cp = component_stream(Component::Checkpoint, &r, &d, Team::Left, &RewardConfig::default());
        for (a, b) in cp.iter().zip(&expected) {
            assert!((a[0] - b).abs() < 1e-12);
        }
        let opp = episode_rewards(&r, &d, Team::Right, &RewardConfig::dense());
        assert_eq!(opp.iter().map(|v| v[0]).sum::<f64>(), -1.0);
    }

    #[test]
    fn own_half_only_pays_nothing() {
        let (mut r, _) = carried_run();
        r.steps.truncate(6);
        r.final_state = None;
        for s in &mut r.steps {
            s.events.clear();
        }
        let d = decompose(&r).unwrap();
        let cp = component_stream(Component::Checkpoint, &r, &d, Team::Left, &RewardConfig::default());
        assert!(cp.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn invariants_on_random_episodes() {
        for seed in 0..30 {
            let config = PitchConfig { max_steps: 150, ..PitchConfig::default() };
            let r = record_random_episode(&config, seed);
            let d = decompose(&r).unwrap();
            let last = r.final_state.as_ref().unwrap();
            for team in Team::BOTH {
                let sparse = episode_rewards(&r, &d, team, &RewardConfig::sparse());
                let dense = episode_rewards(&r, &d, team, &RewardConfig::dense());
                let cp = component_stream(Component::Checkpoint, &r, &d, team, &RewardConfig::default());
                let gd = f64::from(last.goals(team)) - f64::from(last.goals(team.other()));
                assert_eq!(sparse.iter().map(|v| v[0]).sum::<f64>(), gd);
                for k in 0..r.steps.len() {
                    for a in 0..sparse[k].len() {
                        assert!((dense[k][a] - sparse[k][a] - cp[k][a]).abs() < 1e-12);
                        assert!(cp[k][a] >= 0.0);
                    }
                }
                assert!(cp.iter().map(|v| v[0]).sum::<f64>() <= 1.0 + 1e-9);
                let assists = component_stream(Component::Assist, &r, &d, team, &RewardConfig::default());
                let total: f64 = assists.iter().flatten().sum();
                let by_agents = d.assists().iter().filter(|(_, p)| p.team == team && config.controlled().contains(&p.index)).count();
                assert!(by_agents as u32 <= crate::analysis::detect_events(&d).assists[team.index()]);
                assert_eq!(total as usize, by_agents);
            }
        }
    }

    #[test]
    fn composites() {
        let r = record_random_episode(&PitchConfig { max_steps: 40, ..PitchConfig::default() }, 3);
        let d = decompose(&r).unwrap();
        let rc = RewardConfig::pressing();
        let total = episode_rewards(&r, &d, Team::Left, &rc);
        let s = component_stream(Component::Scoring, &r, &d, Team::Left, &rc);
        let b = component_stream(Component::BallPlayerDistance, &r, &d, Team::Left, &rc);
        let g = component_stream(Component::GoalDifference, &r, &d, Team::Left, &rc);
        for k in 0..total.len() {
            for a in 0..total[k].len() {
                assert!((total[k][a] - (s[k][a] + 0.1 * b[k][a] + g[k][a])).abs() < 1e-12);
                assert!(b[k][a] <= 0.0);
            }
        }
        assert!(g[..g.len() - 1].iter().flatten().all(|&x| x == 0.0));
        assert!(RewardConfig::roles_and_assists().validate().is_ok());
        let bad = RewardConfig { components: vec![(Component::Passing, f64::NAN)], ..RewardConfig::default() };
        assert!(bad.validate().is_err());
        assert!(RewardConfig { checkpoint_count: 0, ..RewardConfig::default() }.validate().is_err());
    }

    #[test]
    fn losing_the_ball_costs_the_owner() {
        for seed in 0..20 {
            let r = record_random_episode(&PitchConfig { max_steps: 100, ..PitchConfig::default() }, seed);
            let d = decompose(&r).unwrap();
            let p = component_stream(Component::Possession, &r, &d, Team::Left, &RewardConfig::default());
            let losses = r
                .steps
                .iter()
                .filter(|s| s.state.effective_owner().is_some_and(|o| o.team == Team::Left && o.index > 0))
                .filter(|s| s.events.iter().any(|e| matches!(e, Event::OwnershipChange { player, previous: Some(Team::Left) } if player.team == Team::Right)))
                .count();
            assert_eq!(-p.iter().flatten().sum::<f64>(), losses as f64);
        }
    }
}
