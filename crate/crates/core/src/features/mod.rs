//! Observation encoders and action masks.
//!
//! Both encoders read an own-frame view (see
//! [`RawObservation::view_for`](crate::game::pitch::RawObservation::view_for))
//! so that a team always sees itself attacking towards `+x`.
//!
//! * [`Encoder::encode_simple`]: positions and directions of every player,
//!   ball state, ownership, game mode and the active player;
//!   `8n + 14 + n` values for `n` players per team.
//! * [`Encoder::encode_complex`]: player state (19), ball state (18),
//!   available actions (19), closest teammate (7), closest opponent (7),
//!   every other teammate (7 each), every opponent (7 each) and an identity
//!   one-hot; `15n + 63` values.
//!
//! Coordinates are normalised to `[-1, 1]`, relative offsets by the pitch
//! size and distances by the pitch diagonal.

mod layout;
mod mask;

use std::sync::Arc;

use thiserror::Error;

pub use layout::{Block, Layout};
pub use mask::{compute_action_mask, ActionMask};

use crate::game::pitch::{GameMode, PitchConfig, PlayerObs, RawObservation, Role};
use crate::game::{Team, ACTION_COUNT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("agent index {agent} out of range for a team of {players}")]
    AgentOutOfRange { agent: usize, players: usize },
}

/// Encoded observation plus the layout that labels it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: Arc<Layout>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .block(name)
            .map(|b| &self.values[b.offset..b.offset + b.len()])
    }

    pub fn get(&self, block: &str, field: &str) -> Option<f64> {
        self.layout.index_of(block, field).map(|i| self.values[i])
    }
}

pub fn simple_len(n: usize) -> usize {
    4 * (2 * n) + 6 + 3 + GameMode::ALL.len() + n
}

pub fn complex_len(n: usize) -> usize {
    19 + 18 + ACTION_COUNT + 7 + 7 + 7 * (n - 1) + 7 * n + n
}

fn names(prefix: &str, fields: &[&str]) -> Vec<String> {
    fields.iter().map(|f| format!("{prefix}{f}")).collect()
}

const OTHER_FIELDS: [&str; 7] = ["rel_x", "rel_y", "dir_x", "dir_y", "speed", "distance", "tired"];

fn simple_layout(n: usize) -> Layout {
    let mut l = Layout::default();
    for (side, count) in [("left", n), ("right", n)] {
        let mut fields = Vec::new();
        for i in 0..count {
            fields.extend(names(&format!("{i}_"), &["x", "y", "dir_x", "dir_y"]));
        }
        l.push(&format!("players_{side}"), fields);
    }
    l.push("ball", names("", &["x", "y", "lofted", "dir_x", "dir_y", "in_flight"]));
    l.push("ownership", names("", &["none", "own_team", "opponent"]));
    l.push("game_mode", names("", &["normal", "kick_off", "free_kick", "corner", "penalty"]));
    l.push("active", (0..n).map(|i| i.to_string()).collect());
    l
}

fn complex_layout(n: usize) -> Layout {
    let mut l = Layout::default();
    l.push(
        "player",
        names(
            "",
            &[
                "x", "y", "dir_x", "dir_y", "speed", "role_gk", "role_def", "role_mid", "role_fwd",
                "tired", "sprinting", "dribbling", "zone_own_box", "zone_own_half", "zone_opp_half",
                "zone_opp_box", "has_ball", "goal_distance", "in_opp_box",
            ],
        ),
    );
    l.push(
        "ball",
        names(
            "",
            &[
                "x", "y", "lofted", "zone_own_box", "zone_own_half", "zone_opp_half", "zone_opp_box",
                "rel_x", "rel_y", "distance", "dir_x", "dir_y", "speed", "owned_none", "owned_own_team",
                "owned_opponent", "owned_by_me", "in_flight",
            ],
        ),
    );
    l.push(
        "available_actions",
        crate::game::pitch::Action::ALL.iter().map(|a| a.name().to_string()).collect(),
    );
    l.push("closest_teammate", names("", &OTHER_FIELDS));
    l.push("closest_opponent", names("", &OTHER_FIELDS));
    let mut mates = Vec::new();
    for k in 0..n.saturating_sub(1) {
        mates.extend(names(&format!("{k}_"), &OTHER_FIELDS));
    }
    l.push("teammates", mates);
    let mut opps = Vec::new();
    for k in 0..n {
        opps.extend(names(&format!("{k}_"), &OTHER_FIELDS));
    }
    l.push("opponents", opps);
    l.push("identity", (0..n).map(|i| i.to_string()).collect());
    l
}

/// Encoders bound to one pitch configuration.
#[derive(Debug, Clone)]
pub struct Encoder {
    config: PitchConfig,
    simple: Arc<Layout>,
    complex: Arc<Layout>,
}

impl Encoder {
    pub fn new(config: &PitchConfig) -> Self {
        let n = config.n_per_team;
        Self {
            config: config.clone(),
            simple: Arc::new(simple_layout(n)),
            complex: Arc::new(complex_layout(n)),
        }
    }

    pub fn config(&self) -> &PitchConfig {
        &self.config
    }

    pub fn simple_layout(&self) -> &Arc<Layout> {
        &self.simple
    }

    pub fn complex_layout(&self) -> &Arc<Layout> {
        &self.complex
    }

    fn nx(&self, x: i32) -> f64 {
        2.0 * f64::from(x) / f64::from(self.config.width) - 1.0
    }

    fn ny(&self, y: i32) -> f64 {
        2.0 * f64::from(y) / f64::from(self.config.height) - 1.0
    }

    fn rel(&self, dx: i32, dy: i32) -> (f64, f64) {
        (
            f64::from(dx) / f64::from(self.config.width),
            f64::from(dy) / f64::from(self.config.height),
        )
    }

    fn diag(&self) -> f64 {
        f64::from(self.config.width).hypot(f64::from(self.config.height))
    }

    fn zone(&self, c: crate::game::pitch::Cell) -> [f64; 4] {
        let cfg = &self.config;
        let mut z = [0.0; 4];
        let k = if cfg.in_own_penalty_area(c) {
            0
        } else if cfg.in_opponent_penalty_area(c) {
            3
        } else if 2 * c.x < cfg.width {
            1
        } else {
            2
        };
        z[k] = 1.0;
        z
    }

    fn check(&self, view: &RawObservation, agent: usize) -> Result<(), FeatureError> {
        if agent >= view.players_left.len() {
            return Err(FeatureError::AgentOutOfRange { agent, players: view.players_left.len() });
        }
        Ok(())
    }

    pub fn encode_simple(&self, view: &RawObservation, agent: usize) -> Result<FeatureVector, FeatureError> {
        self.check(view, agent)?;
        let n = self.config.n_per_team;
        let mut v = Vec::with_capacity(simple_len(n));
        for p in view.players_left.iter().chain(&view.players_right) {
            v.extend([self.nx(p.position.x), self.ny(p.position.y), f64::from(p.direction.dx), f64::from(p.direction.dy)]);
        }
        let b = &view.ball;
        v.extend([
            self.nx(b.position.x),
            self.ny(b.position.y),
            f64::from(u8::from(b.lofted)),
            (f64::from(b.direction.dx) / 4.0).clamp(-1.0, 1.0),
            (f64::from(b.direction.dy) / 4.0).clamp(-1.0, 1.0),
            f64::from(u8::from(b.in_flight_from.is_some())),
        ]);
        v.extend(ownership_one_hot(view.ball.owned_team));
        v.extend(GameMode::ALL.iter().map(|&m| f64::from(u8::from(m == view.game_mode))));
        v.extend((0..n).map(|i| f64::from(u8::from(i == agent))));
        debug_assert_eq!(v.len(), self.simple.len());
        Ok(FeatureVector { values: v, layout: self.simple.clone() })
    }

    fn other(&self, me: &PlayerObs, p: &PlayerObs) -> [f64; 7] {
        let (rx, ry) = self.rel(p.position.x - me.position.x, p.position.y - me.position.y);
        [
            rx,
            ry,
            f64::from(p.direction.dx),
            f64::from(p.direction.dy),
            f64::from(p.speed) / 2.0,
            me.position.euclid(p.position) / self.diag(),
            f64::from(u8::from(p.tired)),
        ]
    }

    fn closest<'a>(&self, me: &PlayerObs, others: impl Iterator<Item = &'a PlayerObs>) -> [f64; 7] {
        others
            .enumerate()
            .min_by(|(i, a), (j, b)| {
                me.position
                    .euclid(a.position)
                    .total_cmp(&me.position.euclid(b.position))
                    .then(i.cmp(j))
            })
            .map(|(_, p)| self.other(me, p))
            .unwrap_or([0.0; 7])
    }

    pub fn encode_complex(&self, view: &RawObservation, agent: usize) -> Result<FeatureVector, FeatureError> {
        self.check(view, agent)?;
        let cfg = &self.config;
        let n = cfg.n_per_team;
        let me = &view.players_left[agent];
        let owner = view.owner();
        let mut v = Vec::with_capacity(complex_len(n));

        let role = |r: Role| f64::from(u8::from(me.role == r));
        let has_ball = owner.is_some_and(|o| o.team == Team::Left && o.index == agent);
        v.extend([
            self.nx(me.position.x),
            self.ny(me.position.y),
            f64::from(me.direction.dx),
            f64::from(me.direction.dy),
            f64::from(me.speed) / 2.0,
            role(Role::GK),
            role(Role::DEF),
            role(Role::MID),
            role(Role::FWD),
            f64::from(u8::from(me.tired)),
            f64::from(u8::from(me.sprinting)),
            f64::from(u8::from(me.dribbling)),
        ]);
        v.extend(self.zone(me.position));
        v.extend([
            f64::from(u8::from(has_ball)),
            f64::from(cfg.distance_to_goal(me.position)) / f64::from(cfg.width),
            f64::from(u8::from(cfg.in_opponent_penalty_area(me.position))),
        ]);

        let b = &view.ball;
        v.extend([self.nx(b.position.x), self.ny(b.position.y), f64::from(u8::from(b.lofted))]);
        v.extend(self.zone(b.position));
        let (rx, ry) = self.rel(b.position.x - me.position.x, b.position.y - me.position.y);
        v.extend([
            rx,
            ry,
            me.position.euclid(b.position) / self.diag(),
            (f64::from(b.direction.dx) / 4.0).clamp(-1.0, 1.0),
            (f64::from(b.direction.dy) / 4.0).clamp(-1.0, 1.0),
            (f64::from(b.direction.dx.abs().max(b.direction.dy.abs())) / 4.0).min(1.0),
        ]);
        v.extend(ownership_one_hot(b.owned_team));
        v.extend([f64::from(u8::from(has_ball)), f64::from(u8::from(b.in_flight_from.is_some()))]);

        let mask = compute_action_mask(view, agent, cfg)?;
        v.extend(mask.as_slice().iter().map(|&a| f64::from(u8::from(a))));

        let mates = || view.players_left.iter().enumerate().filter(move |(i, _)| *i != agent).map(|(_, p)| p);
        v.extend(self.closest(me, mates()));
        v.extend(self.closest(me, view.players_right.iter()));
        for p in mates() {
            v.extend(self.other(me, p));
        }
        for p in &view.players_right {
            v.extend(self.other(me, p));
        }
        v.extend((0..n).map(|i| f64::from(u8::from(i == agent))));
        debug_assert_eq!(v.len(), self.complex.len());
        Ok(FeatureVector { values: v, layout: self.complex.clone() })
    }

    pub fn action_mask(&self, view: &RawObservation, agent: usize) -> Result<ActionMask, FeatureError> {
        compute_action_mask(view, agent, &self.config)
    }
}

fn ownership_one_hot(owned: Option<Team>) -> [f64; 3] {
    match owned {
        None => [1.0, 0.0, 0.0],
        Some(Team::Left) => [0.0, 1.0, 0.0],
        Some(Team::Right) => [0.0, 0.0, 1.0],
    }
}

pub fn encode_simple(view: &RawObservation, agent: usize, config: &PitchConfig) -> Result<FeatureVector, FeatureError> {
    Encoder::new(config).encode_simple(view, agent)
}

pub fn encode_complex(view: &RawObservation, agent: usize, config: &PitchConfig) -> Result<FeatureVector, FeatureError> {
    Encoder::new(config).encode_complex(view, agent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::pitch::{Action, Cell, MiniPitch, PlayerRef};

    fn env(n: usize) -> (PitchConfig, MiniPitch) {
        let cfg = PitchConfig { n_per_team: n, keepers: false, ..PitchConfig::default() };
        (cfg.clone(), MiniPitch::new(cfg).unwrap())
    }

    #[test]
    fn lengths_follow_block_formula() {
        assert_eq!(simple_len(3), 41);
        assert_eq!(complex_len(3), 108);
        for n in 1..=5 {
            let (cfg, e) = env(n);
            let enc = Encoder::new(&cfg);
            let view = e.observation_for(Team::Left);
            assert_eq!(enc.encode_simple(&view, 0).unwrap().len(), 8 * n + 14 + n);
            assert_eq!(enc.encode_complex(&view, 0).unwrap().len(), 15 * n + 63);
        }
    }

    #[test]
    fn unowned_ball_one_hot() {
        let (cfg, mut e) = env(3);
        let view = e
            .set_positions(
                &[Cell::new(1, 1), Cell::new(2, 2), Cell::new(3, 3)],
                &[Cell::new(9, 1), Cell::new(9, 2), Cell::new(9, 3)],
                None,
                Cell::new(6, 4),
            )
            .unwrap()
            .view_for(Team::Left);
        let f = encode_simple(&view, 0, &cfg).unwrap();
        assert_eq!(f.block("ownership").unwrap(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn closest_teammate_one_cell_away() {
        let (cfg, mut e) = env(2);
        let view = e
            .set_positions(
                &[Cell::new(3, 3), Cell::new(4, 3)],
                &[Cell::new(9, 1), Cell::new(9, 7)],
                None,
                Cell::new(6, 4),
            )
            .unwrap()
            .view_for(Team::Left);
        let f = encode_complex(&view, 0, &cfg).unwrap();
        let d = f.get("closest_teammate", "distance").unwrap();
        assert!((d - 1.0 / 12f64.hypot(8.0)).abs() < 1e-12);
    }

    #[test]
    fn available_actions_block_is_the_mask() {
        let (cfg, e) = env(3);
        let view = e.observation_for(Team::Left);
        let f = encode_complex(&view, 2, &cfg).unwrap();
        let mask = compute_action_mask(&view, 2, &cfg).unwrap();
        let expect: Vec<f64> = mask.as_slice().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        assert_eq!(f.block("available_actions").unwrap(), expect.as_slice());
    }

    #[test]
    fn bad_agent_index() {
        let (cfg, e) = env(2);
        let view = e.observation_for(Team::Left);
        assert!(encode_simple(&view, 2, &cfg).is_err());
        assert!(encode_complex(&view, 5, &cfg).is_err());
        assert!(compute_action_mask(&view, 2, &cfg).is_err());
    }

    #[test]
    fn mask_opponent_possession() {
        let (cfg, mut e) = env(1);
        let view = e
            .set_positions(&[Cell::new(5, 4)], &[Cell::new(6, 4)], Some(PlayerRef::new(Team::Right, 0)), Cell::new(0, 0))
            .unwrap()
            .view_for(Team::Left);
        let m = compute_action_mask(&view, 0, &cfg).unwrap();
        for a in [Action::ShortPass, Action::LongPass, Action::HighPass, Action::Shot, Action::Dribble] {
            assert!(!m.allows(a), "{a:?}");
        }
        assert!(m.allows(Action::Slide));
    }

    #[test]
    fn mask_own_possession_and_penalty_area() {
        let (cfg, mut e) = env(2);
        let view = e
            .set_positions(
                &[Cell::new(11, 4), Cell::new(8, 4)],
                &[Cell::new(2, 2), Cell::new(2, 6)],
                Some(PlayerRef::new(Team::Left, 0)),
                Cell::new(0, 0),
            )
            .unwrap()
            .view_for(Team::Left);
        let m = compute_action_mask(&view, 0, &cfg).unwrap();
        assert!(!m.allows(Action::Slide));
        assert!(!m.allows(Action::HighPass));
        assert!(!m.allows(Action::LongPass));
        assert!(m.allows(Action::Shot));
        assert!(m.allows(Action::ShortPass));
    }

    #[test]
    fn layout_schema_round_trips() {
        let (cfg, _) = env(3);
        let enc = Encoder::new(&cfg);
        let text = enc.complex_layout().to_schema();
        assert_eq!(&Layout::from_schema(&text).unwrap(), enc.complex_layout().as_ref());
        assert!(Layout::from_schema("x\t1\t1\ta").is_err());
    }
}
