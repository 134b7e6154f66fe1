//! Scripted controllers. All of them read a team's own-frame view (the team
//! listed as Left, attacking `+x`) and return one action index per
//! controlled player.

use super::{Action, Cell, Dir, PitchConfig, RawObservation, Role};
use crate::game::Team;

fn toward(from: Cell, to: Cell) -> Action {
    Action::toward(Dir::new(to.x - from.x, to.y - from.y))
}

fn chase(view: &RawObservation, config: &PitchConfig) -> Option<usize> {
    let ball = view.ball.position;
    config
        .controlled()
        .into_iter()
        .min_by_key(|&i| (view.players_left[i].position.chebyshev(ball), i))
}

/// Chases the ball, tackles the carrier, dribbles to goal and only shoots
/// from point-blank range. Never passes.
pub fn shooter(view: &RawObservation, config: &PitchConfig) -> Vec<usize> {
    let owner = view.owner();
    let chaser = chase(view, config);
    config
        .controlled()
        .into_iter()
        .map(|i| {
            let me = view.players_left[i].position;
            let action = match owner {
                Some(o) if o.team == Team::Left && o.index == i => {
                    if config.distance_to_goal(me) <= 1 {
                        Action::Shot
                    } else {
                        toward(me, Cell::new(config.width, config.height / 2))
                    }
                }
                Some(o) if o.team == Team::Right => {
                    let carrier = view.players_right[o.index].position;
                    if me.chebyshev(carrier) <= 1 {
                        Action::Slide
                    } else if chaser == Some(i) {
                        toward(me, carrier)
                    } else {
                        Action::Idle
                    }
                }
                Some(_) => Action::Idle,
                None if chaser == Some(i) => toward(me, view.ball.position),
                None => Action::Idle,
            };
            action.index()
        })
        .collect()
}

/// The rule-based opponent: carries and shoots, passes under pressure,
/// presses with the nearest player and otherwise holds shape.
pub fn builtin(view: &RawObservation, config: &PitchConfig) -> Vec<usize> {
    let owner = view.owner();
    let chaser = chase(view, config);
    let ball = view.ball.position;
    let cy = config.height / 2;
    let pressured = |c: Cell| view.players_right.iter().any(|p| p.position.chebyshev(c) <= 1);
    config
        .controlled()
        .into_iter()
        .map(|i| {
            let me = view.players_left[i].position;
            let role = view.players_left[i].role;
            let home_x = match role {
                Role::GK => 1,
                Role::DEF => config.width / 4,
                Role::MID => config.width / 2,
                Role::FWD => config.width - config.penalty_depth - 1,
            };
            let action = match owner {
                Some(o) if o.team == Team::Left && o.index == i => {
                    let d = config.distance_to_goal(me);
                    if d <= 2 {
                        Action::Shot
                    } else if pressured(me) && config.controlled().len() > 1 {
                        Action::ShortPass
                    } else {
                        toward(me, Cell::new(config.width, cy))
                    }
                }
                Some(o) if o.team == Team::Left => {
                    // Support: move level with or ahead of the ball.
                    let target = Cell::new((ball.x + 2).min(config.width - 1).max(home_x.min(ball.x)), me.y);
                    if me == target { Action::Idle } else { toward(me, target) }
                }
                Some(o) => {
                    let carrier = view.players_right[o.index].position;
                    if me.chebyshev(carrier) <= 1 {
                        Action::Slide
                    } else if chaser == Some(i) {
                        toward(me, carrier)
                    } else {
                        let target = Cell::new(home_x.min(carrier.x), me.y);
                        if me == target { Action::Idle } else { toward(me, target) }
                    }
                }
                None if chaser == Some(i) => toward(me, ball),
                None => Action::Idle,
            };
            action.index()
        })
        .collect()
}
