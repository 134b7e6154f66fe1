use serde::{Deserialize, Serialize};

use super::Dir;
use crate::game::{GameError, ACTION_COUNT};

/// The default 19-action football action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Action {
    Idle = 0,
    Left = 1,
    TopLeft = 2,
    Top = 3,
    TopRight = 4,
    Right = 5,
    BottomRight = 6,
    Bottom = 7,
    BottomLeft = 8,
    LongPass = 9,
    HighPass = 10,
    ShortPass = 11,
    Shot = 12,
    Sprint = 13,
    ReleaseDirection = 14,
    ReleaseSprint = 15,
    Slide = 16,
    Dribble = 17,
    ReleaseDribble = 18,
}

impl Action {
    pub const ALL: [Action; ACTION_COUNT] = [
        Action::Idle,
        Action::Left,
        Action::TopLeft,
        Action::Top,
        Action::TopRight,
        Action::Right,
        Action::BottomRight,
        Action::Bottom,
        Action::BottomLeft,
        Action::LongPass,
        Action::HighPass,
        Action::ShortPass,
        Action::Shot,
        Action::Sprint,
        Action::ReleaseDirection,
        Action::ReleaseSprint,
        Action::Slide,
        Action::Dribble,
        Action::ReleaseDribble,
    ];

    pub const PASSES: [Action; 3] = [Action::LongPass, Action::HighPass, Action::ShortPass];

    pub fn from_index(index: usize) -> Result<Action, GameError> {
        Action::ALL.get(index).copied().ok_or(GameError::ActionOutOfRange {
            index,
            count: ACTION_COUNT,
        })
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Idle => "idle",
            Action::Left => "left",
            Action::TopLeft => "top_left",
            Action::Top => "top",
            Action::TopRight => "top_right",
            Action::Right => "right",
            Action::BottomRight => "bottom_right",
            Action::Bottom => "bottom",
            Action::BottomLeft => "bottom_left",
            Action::LongPass => "long_pass",
            Action::HighPass => "high_pass",
            Action::ShortPass => "short_pass",
            Action::Shot => "shot",
            Action::Sprint => "sprint",
            Action::ReleaseDirection => "release_direction",
            Action::ReleaseSprint => "release_sprint",
            Action::Slide => "sliding",
            Action::Dribble => "dribble",
            Action::ReleaseDribble => "release_dribble",
        }
    }

    /// Movement direction for the eight directional actions. `Top` is -y.
    pub fn direction(self) -> Option<Dir> {
        let (dx, dy) = match self {
            Action::Left => (-1, 0),
            Action::TopLeft => (-1, -1),
            Action::Top => (0, -1),
            Action::TopRight => (1, -1),
            Action::Right => (1, 0),
            Action::BottomRight => (1, 1),
            Action::Bottom => (0, 1),
            Action::BottomLeft => (-1, 1),
            _ => return None,
        };
        Some(Dir::new(dx, dy))
    }

    /// The directional action moving along `dir` (components are signed).
    pub fn toward(dir: Dir) -> Action {
        match (dir.dx.signum(), dir.dy.signum()) {
            (-1, 0) => Action::Left,
            (-1, -1) => Action::TopLeft,
            (0, -1) => Action::Top,
            (1, -1) => Action::TopRight,
            (1, 0) => Action::Right,
            (1, 1) => Action::BottomRight,
            (0, 1) => Action::Bottom,
            (-1, 1) => Action::BottomLeft,
            _ => Action::Idle,
        }
    }

    pub fn is_pass(self) -> bool {
        Action::PASSES.contains(&self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_round_trip() {
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(Action::from_index(i).unwrap(), *a);
        }
        assert!(Action::from_index(19).is_err());
    }

    #[test]
    fn toward_inverts_direction() {
        for a in &Action::ALL[1..9] {
            assert_eq!(Action::toward(a.direction().unwrap()), *a);
        }
        assert_eq!(Action::toward(Dir::new(0, 0)), Action::Idle);
        assert_eq!(Action::toward(Dir::new(3, -2)), Action::TopRight);
    }
}
