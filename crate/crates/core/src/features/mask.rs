use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::game::pitch::{Action, GameMode, PitchConfig, RawObservation};
use crate::game::{Team, ACTION_COUNT};

/// Which of the 19 actions an agent may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionMask {
    allowed: [bool; ACTION_COUNT],
}

const BALL_ACTIONS: [Action; 5] = [
    Action::LongPass,
    Action::HighPass,
    Action::ShortPass,
    Action::Shot,
    Action::Dribble,
];

impl ActionMask {
    pub fn all() -> Self {
        Self { allowed: [true; ACTION_COUNT] }
    }

    pub fn allows(&self, a: Action) -> bool {
        self.allowed[a.index()]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.allowed
    }

    pub fn allowed_actions(&self) -> impl Iterator<Item = Action> + '_ {
        Action::ALL.into_iter().filter(|a| self.allows(*a))
    }

    pub fn count(&self) -> usize {
        self.allowed.iter().filter(|&&b| b).count()
    }

    pub fn bits(&self) -> u32 {
        self.allowed.iter().enumerate().fold(0, |acc, (i, &b)| acc | (u32::from(b) << i))
    }

    pub fn from_bits(bits: u32) -> Self {
        let mut allowed = [false; ACTION_COUNT];
        for (i, a) in allowed.iter_mut().enumerate() {
            *a = bits >> i & 1 == 1;
        }
        Self { allowed }
    }

    pub fn disable(&mut self, actions: &[Action]) {
        for a in actions {
            self.allowed[a.index()] = false;
        }
    }

    fn keep_only(&mut self, actions: &[Action]) {
        for a in Action::ALL {
            if !actions.contains(&a) {
                self.allowed[a.index()] = false;
            }
        }
    }
}

/// Action mask for own-team player `agent` of an own-frame view.
///
/// Rules, applied in order:
/// 1. opponent owns the ball: no pass, shot or dribble;
/// 2. nobody owns the ball and it is far from every teammate: same;
/// 3. own team owns the ball: no slide;
/// 4. ball too far from the opponent penalty area: no shot;
/// 5. player inside the opponent penalty area: no high or long pass;
/// 6. a teammate owns the ball and it is far from me: no pass, shot or dribble;
/// 7. set pieces: penalty taker may only shoot, corner taker may only pass,
///    free-kick taker may pass or shoot, kick-off taker may not shoot; the
///    non-possessing side may not slide during kick-offs and set pieces.
///
/// Idle is always allowed.
pub fn compute_action_mask(
    view: &RawObservation,
    agent: usize,
    config: &PitchConfig,
) -> Result<ActionMask, FeatureError> {
    let me = view
        .players_left
        .get(agent)
        .ok_or(FeatureError::AgentOutOfRange { agent, players: view.players_left.len() })?;
    let mut mask = ActionMask::all();
    let ball = view.ball.position;
    let far = config.far_threshold();
    let owner = view.owner();
    let owned_team = view.ball.owned_team;

    if owned_team == Some(Team::Right) {
        mask.disable(&BALL_ACTIONS);
    }
    if owned_team.is_none() {
        let nearest = view
            .players_left
            .iter()
            .map(|p| p.position.euclid(ball))
            .fold(f64::INFINITY, f64::min);
        if nearest > far {
            mask.disable(&BALL_ACTIONS);
        }
    }
    if owned_team == Some(Team::Left) {
        mask.disable(&[Action::Slide]);
    }
    if config.width - ball.x > config.shot_range() {
        mask.disable(&[Action::Shot]);
    }
    if config.in_opponent_penalty_area(me.position) {
        mask.disable(&[Action::HighPass, Action::LongPass]);
    }
    if let Some(o) = owner {
        if o.team == Team::Left && o.index != agent && me.position.euclid(ball) > far {
            mask.disable(&BALL_ACTIONS);
        }
    }

    let i_own = owner.is_some_and(|o| o.team == Team::Left && o.index == agent);
    let mode = view.game_mode;
    match mode {
        GameMode::Penalty if i_own => mask.keep_only(&[Action::Idle, Action::Shot]),
        GameMode::Penalty => mask.keep_only(&[Action::Idle]),
        GameMode::Corner if i_own => mask.keep_only(&[
            Action::Idle,
            Action::ShortPass,
            Action::LongPass,
            Action::HighPass,
        ]),
        GameMode::FreeKick if i_own => mask.keep_only(&[
            Action::Idle,
            Action::ShortPass,
            Action::LongPass,
            Action::HighPass,
            Action::Shot,
        ]),
        GameMode::KickOff if i_own => mask.disable(&[Action::Shot]),
        _ => {}
    }
    if (mode.is_set_piece() || mode == GameMode::KickOff) && owned_team != Some(Team::Left) {
        mask.disable(&[Action::Slide]);
    }

    mask.allowed[Action::Idle.index()] = true;
    Ok(mask)
}
