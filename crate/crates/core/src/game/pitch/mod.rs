//! MiniPitch: a deterministic gridworld football game.
//!
//! Integer cells with `x` in `0..=width` and `y` in `0..=height`; the Left
//! team attacks the goal on the `x = width` line until sides are swapped.
//! Observations follow the raw football layout (score, game mode, ball,
//! both player lists) and every team can be given a view of the pitch in its
//! own frame, where it always attacks towards `+x`.

mod action;
pub mod bots;
mod engine;
mod obs;

use serde::{Deserialize, Serialize};

pub use action::Action;
pub use engine::{Event, MiniPitch, PassKind, StepOutcome};
pub use obs::{BallObs, PlayerObs, RawObservation};

use super::{GameError, MarkovGameSpec, Team};
use crate::rng::mix;

/// A pitch cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(i32, i32)", into = "(i32, i32)")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, d: Dir, scale: i32) -> Cell {
        Cell::new(self.x + d.dx * scale, self.y + d.dy * scale)
    }

    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn euclid(self, other: Cell) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }
}

impl From<(i32, i32)> for Cell {
    fn from((x, y): (i32, i32)) -> Self {
        Cell::new(x, y)
    }
}

impl From<Cell> for (i32, i32) {
    fn from(c: Cell) -> Self {
        (c.x, c.y)
    }
}

/// A grid vector; for players a unit step, for the ball its per-step travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "(i32, i32)", into = "(i32, i32)")]
pub struct Dir {
    pub dx: i32,
    pub dy: i32,
}

impl Dir {
    pub const ZERO: Dir = Dir { dx: 0, dy: 0 };

    pub const fn new(dx: i32, dy: i32) -> Self {
        Self { dx, dy }
    }

    pub fn negated(self) -> Dir {
        Dir::new(-self.dx, -self.dy)
    }

    pub fn is_zero(self) -> bool {
        self.dx == 0 && self.dy == 0
    }
}

impl From<(i32, i32)> for Dir {
    fn from((dx, dy): (i32, i32)) -> Self {
        Dir::new(dx, dy)
    }
}

impl From<Dir> for (i32, i32) {
    fn from(d: Dir) -> Self {
        (d.dx, d.dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameMode {
    Normal,
    KickOff,
    FreeKick,
    Corner,
    Penalty,
}

impl GameMode {
    pub const ALL: [GameMode; 5] = [
        GameMode::Normal,
        GameMode::KickOff,
        GameMode::FreeKick,
        GameMode::Corner,
        GameMode::Penalty,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_set_piece(self) -> bool {
        matches!(self, GameMode::FreeKick | GameMode::Corner | GameMode::Penalty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    GK,
    DEF,
    MID,
    FWD,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::GK, Role::DEF, Role::MID, Role::FWD];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// A player identified by team and index within that team's list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlayerRef {
    pub team: Team,
    pub index: usize,
}

impl PlayerRef {
    pub const fn new(team: Team, index: usize) -> Self {
        Self { team, index }
    }
}

/// Environment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitchConfig {
    pub width: i32,
    pub height: i32,
    /// Players per team, goalkeeper included when `keepers` is set.
    pub n_per_team: usize,
    /// Index 0 of each team is an environment-controlled goalkeeper.
    pub keepers: bool,
    pub max_steps: u32,
    /// End the episode on a goal or when possession changes team.
    pub academy_mode: bool,
    /// Teams exchange sides after `max_steps / 2` steps.
    pub halftime_swap: bool,
    pub seed: u64,
    pub gamma: f64,
    pub penalty_depth: i32,
    pub penalty_half_height: i32,
    pub goal_half_width: i32,
    pub intercept_prob: f64,
    pub slide_success: f64,
    pub slide_success_vs_dribble: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            width: 12,
            height: 8,
            n_per_team: 3,
            keepers: true,
            max_steps: 400,
            academy_mode: false,
            halftime_swap: false,
            seed: 0,
            gamma: 0.99,
            penalty_depth: 2,
            penalty_half_height: 2,
            goal_half_width: 1,
            intercept_prob: 0.3,
            slide_success: 0.5,
            slide_success_vs_dribble: 0.25,
        }
    }
}

impl PitchConfig {
    /// One field player per side, no goalkeepers.
    pub fn one_v_one(max_steps: u32) -> Self {
        Self {
            n_per_team: 1,
            keepers: false,
            max_steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let bad = |m: String| Err(GameError::InvalidConfig(m));
        if self.width < 6 || self.height < 4 {
            return bad(format!("pitch {}x{} smaller than 6x4", self.width, self.height));
        }
        if self.n_per_team == 0 {
            return bad("n_per_team must be >= 1".into());
        }
        if self.keepers && self.n_per_team < 2 {
            return bad("keepers need at least 2 players per team".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be >= 1".into());
        }
        if self.halftime_swap && !self.max_steps.is_multiple_of(2) {
            return bad(format!("max_steps {} must be even with halftime_swap", self.max_steps));
        }
        if self.penalty_depth < 1 || self.penalty_depth * 2 >= self.width {
            return bad("penalty_depth out of range".into());
        }
        if self.goal_half_width < 0 || self.goal_half_width * 2 > self.height {
            return bad("goal_half_width out of range".into());
        }
        for (name, p) in [
            ("intercept_prob", self.intercept_prob),
            ("slide_success", self.slide_success),
            ("slide_success_vs_dribble", self.slide_success_vs_dribble),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1]", self.gamma));
        }
        Ok(())
    }

    pub fn game_spec(&self) -> MarkovGameSpec {
        MarkovGameSpec {
            agents_per_team: self.controlled().len(),
            actions_per_agent: super::ACTION_COUNT,
            gamma: self.gamma,
            horizon: self.max_steps,
        }
    }

    /// Indices of agent-controlled players (everyone but the keeper).
    pub fn controlled(&self) -> Vec<usize> {
        let first = usize::from(self.keepers);
        (first..self.n_per_team).collect()
    }

    /// Roles of one team's players in list order.
    pub fn roles(&self) -> Vec<Role> {
        let mut roles = Vec::with_capacity(self.n_per_team);
        if self.keepers {
            roles.push(Role::GK);
        }
        let field = self.n_per_team - usize::from(self.keepers);
        let defenders = if field >= 2 { ((field - 1) / 2).max(1) } else { 0 };
        for i in 0..field {
            roles.push(if i + 1 == field {
                Role::FWD
            } else if i < defenders {
                Role::DEF
            } else {
                Role::MID
            });
        }
        roles
    }

    /// Index of the player that takes kick-offs.
    pub fn kicker(&self) -> usize {
        self.n_per_team - 1
    }

    pub fn center(&self) -> Cell {
        Cell::new(self.width / 2, self.height / 2)
    }

    /// Goal-mouth cells on the goal line a team attacks, in its own frame.
    pub fn goal_mouth(&self) -> impl Iterator<Item = Cell> + '_ {
        let cy = self.height / 2;
        (cy - self.goal_half_width..=cy + self.goal_half_width).map(move |y| Cell::new(self.width, y))
    }

    /// Chebyshev distance from an own-frame cell to the attacked goal mouth.
    pub fn distance_to_goal(&self, c: Cell) -> i32 {
        self.goal_mouth().map(|g| g.chebyshev(c)).min().unwrap_or(i32::MAX)
    }

    /// Whether an own-frame cell lies in the opponent's penalty area.
    pub fn in_opponent_penalty_area(&self, c: Cell) -> bool {
        c.x >= self.width - self.penalty_depth
            && (c.y - self.height / 2).abs() <= self.penalty_half_height
    }

    /// Whether an own-frame cell lies in the team's own penalty area.
    pub fn in_own_penalty_area(&self, c: Cell) -> bool {
        c.x <= self.penalty_depth && (c.y - self.height / 2).abs() <= self.penalty_half_height
    }

    /// Shot-mask range: the ball must be within this many columns of the
    /// attacked goal line.
    pub fn shot_range(&self) -> i32 {
        self.penalty_depth + 2
    }

    /// "Far from the ball" threshold in cells.
    pub fn far_threshold(&self) -> f64 {
        f64::from(self.width) / 3.0
    }

    /// Point reflection through the pitch centre.
    pub fn reflect(&self, c: Cell) -> Cell {
        Cell::new(self.width - c.x, self.height - c.y)
    }

    pub fn contains(&self, c: Cell) -> bool {
        (0..=self.width).contains(&c.x) && (0..=self.height).contains(&c.y)
    }

    pub fn clamp(&self, c: Cell) -> Cell {
        Cell::new(c.x.clamp(0, self.width), c.y.clamp(0, self.height))
    }

    /// Stable hash of every field except the seed.
    /// Hash of the full configuration, seed included.
    pub fn config_hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serialises");
        let words: Vec<u64> = text.bytes().map(u64::from).collect();
        format!("{:016x}", mix(&words))
    }

    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.seed = 0;
        let text = serde_json::to_string(&c).expect("config serialises");
        let words: Vec<u64> = text.bytes().map(u64::from).collect();
        format!("minipitch-{:016x}", mix(&words))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rules() {
        assert!(PitchConfig::default().validate().is_ok());
        let mut c = PitchConfig { width: 5, ..PitchConfig::default() };
        assert!(c.validate().is_err());
        c = PitchConfig { height: 3, ..PitchConfig::default() };
        assert!(c.validate().is_err());
        c = PitchConfig { halftime_swap: true, max_steps: 201, ..PitchConfig::default() };
        assert!(c.validate().is_err());
        c = PitchConfig { keepers: true, n_per_team: 1, ..PitchConfig::default() };
        assert!(c.validate().is_err());
        assert!(PitchConfig::one_v_one(100).validate().is_ok());
    }

    #[test]
    fn roles_by_team_size() {
        let roles = |n, keepers| PitchConfig { n_per_team: n, keepers, ..PitchConfig::default() }.roles();
        assert_eq!(roles(1, false), vec![Role::FWD]);
        assert_eq!(roles(3, true), vec![Role::GK, Role::DEF, Role::FWD]);
        assert_eq!(roles(3, false), vec![Role::DEF, Role::MID, Role::FWD]);
        assert_eq!(roles(5, true), vec![Role::GK, Role::DEF, Role::MID, Role::MID, Role::FWD]);
    }

    #[test]
    fn fingerprint_ignores_seed_only() {
        let a = PitchConfig::default();
        let b = PitchConfig { seed: 99, ..a.clone() };
        let c = PitchConfig { n_per_team: 2, ..a.clone() };
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn reflection_is_an_involution_fixing_the_centre() {
        let c = PitchConfig::default();
        assert_eq!(c.reflect(c.center()), c.center());
        let p = Cell::new(2, 7);
        assert_eq!(c.reflect(c.reflect(p)), p);
    }
}
