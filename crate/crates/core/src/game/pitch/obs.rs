use serde::{Deserialize, Serialize};

use super::{Cell, Dir, GameMode, PlayerRef, Role};
use crate::game::Team;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerObs {
    pub position: Cell,
    pub direction: Dir,
    /// Cells moved during the last step (0, 1 or 2).
    pub speed: u8,
    pub role: Role,
    pub tired: bool,
    pub sprinting: bool,
    pub dribbling: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallObs {
    pub position: Cell,
    /// Travel during the last step.
    pub direction: Dir,
    /// Lofted (high pass in the air).
    pub lofted: bool,
    pub owned_team: Option<Team>,
    pub owned_player: Option<usize>,
    /// Passer of a ball that has been played but not yet collected.
    pub in_flight_from: Option<PlayerRef>,
}

/// Raw game state in physical pitch coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawObservation {
    pub step_index: u32,
    pub steps_left: u32,
    /// Goals of (Left, Right).
    pub score: (u32, u32),
    pub game_mode: GameMode,
    pub ball: BallObs,
    pub players_left: Vec<PlayerObs>,
    pub players_right: Vec<PlayerObs>,
    /// Set between halftime and full time when sides are exchanged.
    pub sides_swapped: bool,
    pub width: i32,
    pub height: i32,
}

impl RawObservation {
    pub fn team(&self, team: Team) -> &[PlayerObs] {
        match team {
            Team::Left => &self.players_left,
            Team::Right => &self.players_right,
        }
    }

    pub fn player(&self, p: PlayerRef) -> Option<&PlayerObs> {
        self.team(p.team).get(p.index)
    }

    pub fn goals(&self, team: Team) -> u32 {
        match team {
            Team::Left => self.score.0,
            Team::Right => self.score.1,
        }
    }

    pub fn owner(&self) -> Option<PlayerRef> {
        match (self.ball.owned_team, self.ball.owned_player) {
            (Some(team), Some(index)) => Some(PlayerRef::new(team, index)),
            _ => None,
        }
    }

    /// The owner, or the passer while a played ball is uncollected.
    pub fn effective_owner(&self) -> Option<PlayerRef> {
        self.owner().or(self.ball.in_flight_from)
    }

    fn reflect_cell(&self, c: Cell) -> Cell {
        Cell::new(self.width - c.x, self.height - c.y)
    }

    /// Point reflection of every position and direction; labels untouched.
    pub fn reflect_coordinates(&self) -> RawObservation {
        let mut o = self.clone();
        o.ball.position = self.reflect_cell(self.ball.position);
        o.ball.direction = self.ball.direction.negated();
        for p in o.players_left.iter_mut().chain(o.players_right.iter_mut()) {
            p.position = self.reflect_cell(p.position);
            p.direction = p.direction.negated();
        }
        o
    }

    /// Exchanges the Left and Right labels (player lists, score, ownership).
    pub fn swap_labels(&self) -> RawObservation {
        let mut o = self.clone();
        std::mem::swap(&mut o.players_left, &mut o.players_right);
        o.score = (self.score.1, self.score.0);
        o.ball.owned_team = self.ball.owned_team.map(Team::other);
        o.ball.in_flight_from = self
            .ball
            .in_flight_from
            .map(|p| PlayerRef::new(p.team.other(), p.index));
        o
    }

    /// The observation as the opposing team sees it: coordinates reflected
    /// and labels exchanged.
    pub fn mirrored(&self) -> RawObservation {
        self.reflect_coordinates().swap_labels()
    }

    /// Whether `team` currently attacks towards `-x` in physical coordinates.
    pub fn frame_reflected(&self, team: Team) -> bool {
        (team == Team::Right) != self.sides_swapped
    }

    /// The observation in `team`'s own frame: the team is listed as Left and
    /// attacks towards `+x`.
    pub fn view_for(&self, team: Team) -> RawObservation {
        let mut o = if self.frame_reflected(team) {
            self.reflect_coordinates()
        } else {
            self.clone()
        };
        if team == Team::Right {
            o = o.swap_labels();
        }
        o.sides_swapped = false;
        o
    }

    /// Structural invariants: positions on the pitch, consistent ownership.
    pub fn check_invariants(&self) -> Result<(), String> {
        let inside = |c: Cell| (0..=self.width).contains(&c.x) && (0..=self.height).contains(&c.y);
        if !inside(self.ball.position) {
            return Err(format!("ball off the pitch at {:?}", self.ball.position));
        }
        for (team, players) in [(Team::Left, &self.players_left), (Team::Right, &self.players_right)] {
            for (i, p) in players.iter().enumerate() {
                if !inside(p.position) {
                    return Err(format!("{team:?} player {i} off the pitch at {:?}", p.position));
                }
            }
        }
        match (self.ball.owned_team, self.ball.owned_player) {
            (None, None) => {}
            (Some(t), Some(i)) => {
                if i >= self.team(t).len() {
                    return Err(format!("owner index {i} out of range"));
                }
                if self.ball.in_flight_from.is_some() {
                    return Err("owned ball cannot be in flight".into());
                }
                if self.team(t)[i].position != self.ball.position {
                    return Err("owner and ball at different cells".into());
                }
            }
            _ => return Err("owned_player set iff owned_team set".into()),
        }
        Ok(())
    }
}
