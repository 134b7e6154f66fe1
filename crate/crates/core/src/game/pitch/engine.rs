use serde::{Deserialize, Serialize};

use super::{Action, BallObs, Cell, Dir, GameMode, PitchConfig, PlayerObs, PlayerRef, RawObservation, Role};
use crate::game::{GameError, Team};
use crate::rng::{CounterRng, DrawKind};

const FATIGUE_TIRED: u8 = 6;
/// Chance that a missed, unsaved shot becomes a corner instead of a goal kick.
const CORNER_PROB: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PassKind {
    Short,
    Long,
    High,
}

impl PassKind {
    fn speed(self) -> usize {
        match self {
            PassKind::Short => 3,
            PassKind::Long => 4,
            PassKind::High => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Move { player: PlayerRef, from: Cell, to: Cell },
    PassAttempt { passer: PlayerRef, kind: PassKind, target: Cell },
    PassComplete { passer: PlayerRef, receiver: PlayerRef },
    /// Possession moved to `player` from another team (or from nobody).
    OwnershipChange { player: PlayerRef, previous: Option<Team> },
    Shot { shooter: PlayerRef, probability: f64, scored: bool },
    Goal { team: Team, scorer: PlayerRef },
    OutOfPlay { restart: GameMode, team: Team },
}

impl Event {
    /// The team the event is attributed to.
    pub fn team(&self) -> Team {
        match self {
            Event::Move { player, .. } | Event::OwnershipChange { player, .. } => player.team,
            Event::PassAttempt { passer, .. } | Event::PassComplete { passer, .. } => passer.team,
            Event::Shot { shooter, .. } => shooter.team,
            Event::Goal { team, .. } | Event::OutOfPlay { team, .. } => *team,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: RawObservation,
    pub events: Vec<Event>,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
struct Player {
    pos: Cell,
    dir: Dir,
    speed: u8,
    role: Role,
    fatigue: u8,
    sprinting: bool,
    dribbling: bool,
}

impl Player {
    fn tired(&self) -> bool {
        self.fatigue >= FATIGUE_TIRED
    }
}

#[derive(Debug, Clone)]
enum Holder {
    Player(PlayerRef),
    Flight {
        passer: PlayerRef,
        path: Vec<Cell>,
        travelled: usize,
        speed: usize,
        lofted: bool,
    },
    /// Played ball lying uncollected; `passer` keeps nominal ownership.
    Rest { passer: Option<PlayerRef> },
}

#[derive(Debug, Clone, Copy)]
enum Restart {
    KickOff(Team),
    GoalKick(Team),
    Corner { team: Team, low: bool },
    Penalty(PlayerRef),
}

/// The MiniPitch environment. Single-threaded; move it between threads
/// freely but never share it.
#[derive(Debug, Clone)]
pub struct MiniPitch {
    config: PitchConfig,
    rng: CounterRng,
    step: u32,
    score: [u32; 2],
    mode: GameMode,
    players: [Vec<Player>; 2],
    ball: Cell,
    ball_dir: Dir,
    holder: Holder,
    possession: Option<Team>,
    swapped: bool,
    terminal: bool,
}

fn line(from: Cell, to: Cell) -> Vec<Cell> {
    // Bresenham, excluding the start cell.
    let (mut x, mut y) = (from.x, from.y);
    let dx = (to.x - from.x).abs();
    let dy = -(to.y - from.y).abs();
    let sx = if from.x < to.x { 1 } else { -1 };
    let sy = if from.y < to.y { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::new();
    while (x, y) != (to.x, to.y) {
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
        out.push(Cell::new(x, y));
    }
    out
}

impl MiniPitch {
    pub fn new(config: PitchConfig) -> Result<Self, GameError> {
        config.validate()?;
        let seed = config.seed;
        let mut env = Self {
            rng: CounterRng::new(seed),
            step: 0,
            score: [0, 0],
            mode: GameMode::KickOff,
            players: [Vec::new(), Vec::new()],
            ball: config.center(),
            ball_dir: Dir::ZERO,
            holder: Holder::Rest { passer: None },
            possession: None,
            swapped: false,
            terminal: false,
            config,
        };
        env.reset(seed);
        Ok(env)
    }

    pub fn config(&self) -> &PitchConfig {
        &self.config
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    /// Restarts the episode from the Left team's kick-off.
    pub fn reset(&mut self, seed: u64) -> RawObservation {
        self.rng = CounterRng::new(seed);
        self.step = 0;
        self.score = [0, 0];
        self.swapped = false;
        self.terminal = false;
        let roles = self.config.roles();
        let fresh = |role: Role| Player {
            pos: Cell::new(0, 0),
            dir: Dir::ZERO,
            speed: 0,
            role,
            fatigue: 0,
            sprinting: false,
            dribbling: false,
        };
        self.players = [
            roles.iter().map(|&r| fresh(r)).collect(),
            roles.iter().map(|&r| fresh(r)).collect(),
        ];
        self.kick_off(Team::Left);
        self.observation()
    }

    fn reflected(&self, team: Team) -> bool {
        (team == Team::Right) != self.swapped
    }

    /// Converts between physical and `team`'s own frame (an involution).
    fn frame(&self, team: Team, c: Cell) -> Cell {
        if self.reflected(team) {
            self.config.reflect(c)
        } else {
            c
        }
    }

    fn frame_dir(&self, team: Team, d: Dir) -> Dir {
        if self.reflected(team) {
            d.negated()
        } else {
            d
        }
    }

    fn player(&self, p: PlayerRef) -> &Player {
        &self.players[p.team.index()][p.index]
    }

    fn player_mut(&mut self, p: PlayerRef) -> &mut Player {
        &mut self.players[p.team.index()][p.index]
    }

    fn owner(&self) -> Option<PlayerRef> {
        match self.holder {
            Holder::Player(p) => Some(p),
            _ => None,
        }
    }

    fn formation(&self, team: Team, kicking: bool) -> Vec<Cell> {
        let c = &self.config;
        let (w, h) = (c.width, c.height);
        let roles = c.roles();
        let count = |r: Role| roles.iter().filter(|&&x| x == r).count() as i32;
        let mut seen = [0i32; 4];
        roles
            .iter()
            .enumerate()
            .map(|(i, &role)| {
                let k = seen[role.index()];
                seen[role.index()] += 1;
                let spread = |n: i32| h * (k + 1) / (n + 1);
                let own = if i == c.kicker() {
                    if kicking {
                        c.center()
                    } else {
                        Cell::new(w / 2 - 2, h / 2)
                    }
                } else {
                    match role {
                        Role::GK => Cell::new(1, h / 2),
                        Role::DEF => Cell::new(w / 4, spread(count(Role::DEF))),
                        Role::MID => Cell::new((w / 2 + w / 4) / 2, spread(count(Role::MID))),
                        Role::FWD => Cell::new(w / 2 - 1, spread(count(Role::FWD))),
                    }
                };
                self.frame(team, own)
            })
            .collect()
    }

    fn kick_off(&mut self, team: Team) {
        for t in Team::BOTH {
            let cells = self.formation(t, t == team);
            for (p, cell) in self.players[t.index()].iter_mut().zip(cells) {
                p.pos = cell;
                p.dir = Dir::ZERO;
                p.speed = 0;
                p.sprinting = false;
                p.dribbling = false;
            }
        }
        let kicker = PlayerRef::new(team, self.config.kicker());
        self.ball = self.player(kicker).pos;
        self.ball_dir = Dir::ZERO;
        self.holder = Holder::Player(kicker);
        self.possession = Some(team);
        self.mode = GameMode::KickOff;
    }

    pub fn observation(&self) -> RawObservation {
        let players = |t: Team| {
            self.players[t.index()]
                .iter()
                .map(|p| PlayerObs {
                    position: p.pos,
                    direction: p.dir,
                    speed: p.speed,
                    role: p.role,
                    tired: p.tired(),
                    sprinting: p.sprinting,
                    dribbling: p.dribbling,
                })
                .collect()
        };
        let (owned_team, owned_player, in_flight_from, lofted) = match &self.holder {
            Holder::Player(p) => (Some(p.team), Some(p.index), None, false),
            Holder::Flight { passer, lofted, .. } => (None, None, Some(*passer), *lofted),
            Holder::Rest { passer } => (None, None, *passer, false),
        };
        RawObservation {
            step_index: self.step,
            steps_left: self.config.max_steps - self.step,
            score: (self.score[0], self.score[1]),
            game_mode: self.mode,
            ball: BallObs {
                position: self.ball,
                direction: self.ball_dir,
                lofted,
                owned_team,
                owned_player,
                in_flight_from,
            },
            players_left: players(Team::Left),
            players_right: players(Team::Right),
            sides_swapped: self.swapped,
            width: self.config.width,
            height: self.config.height,
        }
    }

    /// The current observation in `team`'s own frame.
    pub fn observation_for(&self, team: Team) -> RawObservation {
        self.observation().view_for(team)
    }

    fn keeper_action(&self, team: Team) -> Action {
        let me = PlayerRef::new(team, 0);
        if self.owner() == Some(me) {
            let has_mate = self.players[team.index()].len() > 1;
            return if has_mate { Action::ShortPass } else { Action::Idle };
        }
        let c = &self.config;
        let own_ball = self.frame(team, self.ball);
        let cy = c.height / 2;
        let target = Cell::new(1, own_ball.y.clamp(cy - c.goal_half_width, cy + c.goal_half_width));
        let pos = self.frame(team, self.player(me).pos);
        Action::toward(Dir::new(target.x - pos.x, target.y - pos.y))
    }

    fn give_ball(&mut self, to: PlayerRef, events: &mut Vec<Event>) {
        let previous = self.possession;
        if previous != Some(to.team) {
            events.push(Event::OwnershipChange { player: to, previous });
        }
        for p in self.players.iter_mut().flatten() {
            p.dribbling = false;
        }
        self.holder = Holder::Player(to);
        self.ball = self.player(to).pos;
        self.possession = Some(to.team);
    }

    fn all_players(&self) -> impl Iterator<Item = PlayerRef> + '_ {
        Team::BOTH.into_iter().flat_map(move |t| {
            (0..self.players[t.index()].len()).map(move |i| PlayerRef::new(t, i))
        })
    }

    fn draw_index(&self, p: PlayerRef) -> u64 {
        (p.team.index() * 64 + p.index) as u64
    }

    /// Advances one step with one action index per controlled player of
    /// each team, given in the team's own frame.
    pub fn step(&mut self, left: &[usize], right: &[usize]) -> Result<StepOutcome, GameError> {
        if self.terminal {
            return Err(GameError::StepAfterTerminal);
        }
        let controlled = self.config.controlled();
        let n = self.config.n_per_team;
        let mut acts = [vec![Action::Idle; n], vec![Action::Idle; n]];
        for (team, given) in [(Team::Left, left), (Team::Right, right)] {
            if given.len() != controlled.len() {
                return Err(GameError::ActionCount {
                    team,
                    expected: controlled.len(),
                    got: given.len(),
                });
            }
            for (&slot, &index) in controlled.iter().zip(given) {
                let a = Action::from_index(index)?;
                let a = match a.direction() {
                    Some(d) => Action::toward(self.frame_dir(team, d)),
                    None => a,
                };
                acts[team.index()][slot] = a;
            }
            if self.config.keepers {
                acts[team.index()][0] = self.keeper_action(team);
            }
        }

        let step = u64::from(self.step);
        let mut events = Vec::new();
        let mut restart: Option<Restart> = None;
        let mut scored: Option<Team> = None;
        let start: Vec<Cell> = self.all_players().map(|p| self.player(p).pos).collect();

        // Tackles.
        if let Some(owner) = self.owner() {
            let defending = owner.team.other();
            for i in 0..n {
                let slider = PlayerRef::new(defending, i);
                if acts[defending.index()][i] != Action::Slide
                    || self.player(slider).pos.chebyshev(self.player(owner).pos) > 1
                {
                    continue;
                }
                let p = if self.player(owner).dribbling {
                    self.config.slide_success_vs_dribble
                } else {
                    self.config.slide_success
                };
                if self.rng.bernoulli(step, DrawKind::Slide, self.draw_index(slider), p) {
                    self.give_ball(slider, &mut events);
                    restart = None;
                    break;
                }
                let spot = self.frame(defending, self.player(owner).pos);
                if self.config.in_own_penalty_area(spot) {
                    restart = Some(Restart::Penalty(owner));
                }
            }
        }

        // Ball actions of the (possibly new) owner.
        if let (Some(owner), None) = (self.owner(), restart) {
            match acts[owner.team.index()][owner.index] {
                Action::Shot => {
                    let (outcome, ev) = self.shoot(owner, step);
                    events.extend(ev);
                    match outcome {
                        ShotOutcome::Goal => {
                            scored = Some(owner.team);
                            restart = Some(Restart::KickOff(owner.team.other()));
                        }
                        ShotOutcome::Saved(keeper) => self.give_ball(keeper, &mut events),
                        ShotOutcome::Out(r) => restart = Some(r),
                    }
                }
                a if a.is_pass() => {
                    let kind = match a {
                        Action::ShortPass => PassKind::Short,
                        Action::LongPass => PassKind::Long,
                        _ => PassKind::High,
                    };
                    if let Some(target) = self.pass_target(owner, kind) {
                        let from = self.player(owner).pos;
                        self.player_mut(owner).dribbling = false;
                        events.push(Event::PassAttempt { passer: owner, kind, target });
                        self.holder = Holder::Flight {
                            passer: owner,
                            path: line(from, target),
                            travelled: 0,
                            speed: kind.speed(),
                            lofted: kind == PassKind::High,
                        };
                    }
                }
                Action::Dribble => self.player_mut(owner).dribbling = true,
                _ => {}
            }
        }
        for p in self.all_players().collect::<Vec<_>>() {
            if acts[p.team.index()][p.index] == Action::ReleaseDribble {
                self.player_mut(p).dribbling = false;
            }
        }

        // Simultaneous movement.
        let owner = self.owner();
        for p in self.all_players().collect::<Vec<_>>() {
            let a = acts[p.team.index()][p.index];
            let config = self.config.clone();
            let pl = self.player_mut(p);
            let mut cells = 0;
            match a {
                Action::Sprint => {
                    pl.sprinting = true;
                    if !pl.dir.is_zero() {
                        cells = if pl.tired() { 1 } else { 2 };
                    }
                }
                Action::ReleaseSprint => pl.sprinting = false,
                Action::ReleaseDirection => pl.dir = Dir::ZERO,
                _ => {
                    if let Some(d) = a.direction() {
                        pl.dir = d;
                        cells = if pl.sprinting && !pl.tired() { 2 } else { 1 };
                    }
                }
            }
            let before = pl.pos;
            pl.pos = config.clamp(pl.pos.offset(pl.dir, cells));
            pl.speed = before.chebyshev(pl.pos) as u8;
            pl.fatigue = if pl.speed == 2 {
                pl.fatigue.saturating_add(2)
            } else {
                pl.fatigue.saturating_sub(1)
            };
            if owner == Some(p) {
                self.ball = self.player(p).pos;
            }
        }
        let prev_ball = self.ball;

        self.advance_ball(step, &mut events);
        if let Holder::Player(p) = self.holder {
            self.ball = self.player(p).pos;
        }
        self.ball_dir = Dir::new(self.ball.x - prev_ball.x, self.ball.y - prev_ball.y);
        if let Some(owner) = owner {
            if self.owner() == Some(owner) {
                let d = self.player(owner).pos;
                let s = start[owner.team.index() * n + owner.index];
                self.ball_dir = Dir::new(d.x - s.x, d.y - s.y);
            }
        }

        for (k, p) in self.all_players().collect::<Vec<_>>().into_iter().enumerate() {
            let to = self.player(p).pos;
            if to != start[k] {
                events.push(Event::Move { player: p, from: start[k], to });
            }
        }

        self.mode = GameMode::Normal;
        if let Some(team) = scored {
            self.score[team.index()] += 1;
            events.push(Event::Goal {
                team,
                scorer: owner.expect("scorer owned the ball"),
            });
        }
        if let Some(r) = restart {
            self.apply_restart(r, step, &mut events);
        }

        self.step += 1;
        if self.config.halftime_swap && self.step == self.config.max_steps / 2 {
            self.swap_sides();
        }
        let exchanged = events
            .iter()
            .any(|e| matches!(e, Event::OwnershipChange { player, previous: Some(t) } if *t != player.team));
        self.terminal = self.step >= self.config.max_steps
            || (self.config.academy_mode && (scored.is_some() || exchanged));
        Ok(StepOutcome {
            observation: self.observation(),
            events,
            terminal: self.terminal,
        })
    }

    fn shoot(&self, shooter: PlayerRef, step: u64) -> (ShotOutcome, Vec<Event>) {
        let c = &self.config;
        let team = shooter.team;
        let from = self.frame(team, self.player(shooter).pos);
        let target = c
            .goal_mouth()
            .min_by_key(|g| (g.chebyshev(from), (g.y - c.height / 2).abs(), g.y))
            .expect("goal mouth non-empty");
        let d = target.chebyshev(from);
        let mut p = if d <= 1 { 1.0 } else { (1.0 - 0.2 * f64::from(d - 1)).max(0.05) };
        let keeper = PlayerRef::new(team.other(), 0);
        let blocked = c.keepers && line(from, target).contains(&self.frame(team, self.player(keeper).pos));
        if blocked {
            p *= 0.5;
        }
        let scored = self.rng.bernoulli(step, DrawKind::Shot, 0, p);
        let mut events = vec![Event::Shot { shooter, probability: p, scored }];
        let outcome = if scored {
            ShotOutcome::Goal
        } else if blocked {
            ShotOutcome::Saved(keeper)
        } else if self.rng.bernoulli(step, DrawKind::Restart, 0, CORNER_PROB) {
            events.push(Event::OutOfPlay { restart: GameMode::Corner, team });
            ShotOutcome::Out(Restart::Corner { team, low: from.y < c.height / 2 })
        } else {
            events.push(Event::OutOfPlay { restart: GameMode::FreeKick, team: team.other() });
            ShotOutcome::Out(Restart::GoalKick(team.other()))
        };
        (outcome, events)
    }

    fn pass_target(&self, passer: PlayerRef, kind: PassKind) -> Option<Cell> {
        let team = passer.team;
        let me = self.player(passer).pos;
        let mates = (0..self.players[team.index()].len())
            .filter(|&i| i != passer.index)
            .map(|i| (i, self.player(PlayerRef::new(team, i)).pos));
        let best = match kind {
            PassKind::Short => mates.min_by(|a, b| {
                me.euclid(a.1).total_cmp(&me.euclid(b.1)).then(a.0.cmp(&b.0))
            }),
            PassKind::Long | PassKind::High => mates.min_by(|a, b| {
                let (fa, fb) = (self.frame(team, a.1).x, self.frame(team, b.1).x);
                fb.cmp(&fa)
                    .then(me.euclid(a.1).total_cmp(&me.euclid(b.1)))
                    .then(a.0.cmp(&b.0))
            }),
        };
        best.map(|(_, c)| c).filter(|&c| c != me)
    }

    fn advance_ball(&mut self, step: u64, events: &mut Vec<Event>) {
        if let Holder::Flight { passer, path, travelled, speed, lofted } = self.holder.clone() {
            let end = (travelled + speed).min(path.len());
            for (k, &cell) in path.iter().enumerate().take(end).skip(travelled) {
                self.ball = cell;
                if lofted {
                    continue;
                }
                let opponents = passer.team.other();
                for i in 0..self.players[opponents.index()].len() {
                    let o = PlayerRef::new(opponents, i);
                    if self.player(o).pos == cell
                        && self.rng.bernoulli(
                            step,
                            DrawKind::Intercept,
                            (k as u64) << 8 | self.draw_index(o),
                            self.config.intercept_prob,
                        )
                    {
                        self.give_ball(o, events);
                        return;
                    }
                }
            }
            if end < path.len() {
                self.holder = Holder::Flight { passer, path, travelled: end, speed, lofted };
                return;
            }
            // Landing: the passing team collects first, then opponents.
            let landing = self.ball;
            let mut near: Vec<(bool, i32, PlayerRef)> = self
                .all_players()
                .filter(|&p| p != passer)
                .map(|p| (p.team != passer.team, self.player(p).pos.chebyshev(landing), p))
                .filter(|&(_, d, _)| d <= 1)
                .collect();
            near.sort();
            match near.first() {
                Some(&(false, _, receiver)) => {
                    self.give_ball(receiver, events);
                    events.push(Event::PassComplete { passer, receiver });
                }
                Some(&(true, _, thief)) => self.give_ball(thief, events),
                None => self.holder = Holder::Rest { passer: Some(passer) },
            }
            return;
        }
        if let Holder::Rest { passer } = self.holder {
            let ball = self.ball;
            let dist: Vec<(i32, PlayerRef)> = self
                .all_players()
                .map(|p| (self.player(p).pos.chebyshev(ball), p))
                .filter(|&(d, _)| d <= 1)
                .collect();
            let Some(best) = dist.iter().map(|&(d, _)| d).min() else {
                return;
            };
            let tied: Vec<PlayerRef> = dist.iter().filter(|&&(d, _)| d == best).map(|&(_, p)| p).collect();
            let who = tied[self.rng.pick(step, DrawKind::Pickup, 0, tied.len())];
            self.give_ball(who, events);
            if let Some(passer) = passer {
                if passer.team == who.team && passer != who {
                    events.push(Event::PassComplete { passer, receiver: who });
                }
            }
        }
    }

    fn apply_restart(&mut self, r: Restart, _step: u64, events: &mut Vec<Event>) {
        let c = self.config.clone();
        match r {
            Restart::KickOff(team) => self.kick_off(team),
            Restart::GoalKick(team) => {
                let taker = if c.keepers {
                    PlayerRef::new(team, 0)
                } else {
                    (0..c.n_per_team)
                        .map(|i| PlayerRef::new(team, i))
                        .min_by_key(|&p| (self.frame(team, self.player(p).pos).x, p.index))
                        .expect("team non-empty")
                };
                self.give_ball(taker, events);
                self.mode = GameMode::FreeKick;
            }
            Restart::Corner { team, low } => {
                let corner = self.frame(team, Cell::new(c.width, if low { 0 } else { c.height }));
                let taker = c
                    .controlled()
                    .into_iter()
                    .map(|i| PlayerRef::new(team, i))
                    .min_by_key(|&p| (self.player(p).pos.chebyshev(corner), p.index))
                    .expect("a controlled player exists");
                self.player_mut(taker).pos = corner;
                self.give_ball(taker, events);
                self.mode = GameMode::Corner;
            }
            Restart::Penalty(taker) => {
                let spot = self.frame(taker.team, Cell::new(c.width - c.penalty_depth, c.height / 2));
                self.player_mut(taker).pos = spot;
                self.give_ball(taker, events);
                self.mode = GameMode::Penalty;
            }
        }
        self.ball_dir = Dir::ZERO;
    }

    fn swap_sides(&mut self) {
        let c = self.config.clone();
        for p in self.players.iter_mut().flatten() {
            p.pos = c.reflect(p.pos);
            p.dir = p.dir.negated();
        }
        self.ball = c.reflect(self.ball);
        self.ball_dir = self.ball_dir.negated();
        if let Holder::Flight { path, .. } = &mut self.holder {
            for cell in path.iter_mut() {
                *cell = c.reflect(*cell);
            }
        }
        self.swapped = !self.swapped;
    }

    /// Places players and the ball directly; for tests and scenario setup.
    /// Positions are physical. The ball goes to `owner` when given,
    /// otherwise it rests at `ball`.
    pub fn set_positions(
        &mut self,
        left: &[Cell],
        right: &[Cell],
        owner: Option<PlayerRef>,
        ball: Cell,
    ) -> Result<RawObservation, GameError> {
        let n = self.config.n_per_team;
        if left.len() != n || right.len() != n {
            return Err(GameError::InvalidConfig(format!("expected {n} positions per team")));
        }
        for (t, cells) in [(Team::Left, left), (Team::Right, right)] {
            for (p, &cell) in self.players[t.index()].iter_mut().zip(cells) {
                if !self.config.contains(cell) {
                    return Err(GameError::InvalidConfig(format!("{cell:?} off the pitch")));
                }
                p.pos = cell;
            }
        }
        match owner {
            Some(o) => {
                if o.index >= n {
                    return Err(GameError::InvalidConfig("owner out of range".into()));
                }
                self.holder = Holder::Player(o);
                self.ball = self.player(o).pos;
                self.possession = Some(o.team);
            }
            None => {
                self.holder = Holder::Rest { passer: None };
                self.ball = self.config.clamp(ball);
            }
        }
        self.mode = GameMode::Normal;
        Ok(self.observation())
    }
}

enum ShotOutcome {
    Goal,
    Saved(PlayerRef),
    Out(Restart),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idle(env: &MiniPitch) -> Vec<usize> {
        vec![0; env.config().controlled().len()]
    }

    #[test]
    fn kickoff_state() {
        let cfg = PitchConfig { seed: 7, ..PitchConfig::default() };
        let env = MiniPitch::new(cfg).unwrap();
        let obs = env.observation();
        assert_eq!(obs.ball.position, Cell::new(6, 4));
        assert_eq!(obs.score, (0, 0));
        assert_eq!(obs.game_mode, GameMode::KickOff);
        assert_eq!(obs.ball.owned_team, Some(Team::Left));
        assert_eq!(obs.ball.owned_player, Some(2));
        obs.check_invariants().unwrap();
    }

    #[test]
    fn reset_is_deterministic() {
        let cfg = PitchConfig { seed: 7, ..PitchConfig::default() };
        let a = MiniPitch::new(cfg.clone()).unwrap().observation();
        let b = MiniPitch::new(cfg).unwrap().observation();
        assert_eq!(a, b);
    }

    #[test]
    fn steps_left_initialised_from_max_steps() {
        let cfg = PitchConfig { halftime_swap: true, max_steps: 200, ..PitchConfig::default() };
        assert_eq!(MiniPitch::new(cfg).unwrap().observation().steps_left, 200);
    }

    #[test]
    fn idle_step_changes_nothing() {
        let cfg = PitchConfig { keepers: false, ..PitchConfig::default() };
        let mut env = MiniPitch::new(cfg).unwrap();
        let before = env.observation();
        let out = env.step(&idle(&env), &idle(&env)).unwrap();
        assert!(out.events.is_empty(), "{:?}", out.events);
        assert_eq!(out.observation.players_left, before.players_left);
        assert_eq!(out.observation.players_right, before.players_right);
        assert_eq!(out.observation.ball.position, before.ball.position);
    }

    #[test]
    fn adjacent_shot_scores() {
        let cfg = PitchConfig::one_v_one(50);
        let mut env = MiniPitch::new(cfg).unwrap();
        env.set_positions(&[Cell::new(11, 4)], &[Cell::new(2, 2)], Some(PlayerRef::new(Team::Left, 0)), Cell::new(0, 0))
            .unwrap();
        let out = env.step(&[Action::Shot.index()], &[0]).unwrap();
        assert!(out.events.iter().any(|e| matches!(e, Event::Goal { team: Team::Left, .. })));
        assert_eq!(out.observation.score, (1, 0));
        // Right kicks off after conceding.
        assert_eq!(out.observation.ball.owned_team, Some(Team::Right));
        assert_eq!(out.observation.game_mode, GameMode::KickOff);
    }

    #[test]
    fn rejects_bad_actions_and_steps_after_terminal() {
        let mut env = MiniPitch::new(PitchConfig::one_v_one(1)).unwrap();
        assert!(matches!(env.step(&[19], &[0]), Err(GameError::ActionOutOfRange { .. })));
        assert!(matches!(env.step(&[0, 0], &[0]), Err(GameError::ActionCount { .. })));
        let out = env.step(&[0], &[0]).unwrap();
        assert!(out.terminal);
        assert_eq!(env.step(&[0], &[0]).unwrap_err(), GameError::StepAfterTerminal);
    }

    #[test]
    fn bresenham_path_is_connected() {
        let p = line(Cell::new(0, 0), Cell::new(5, 2));
        assert_eq!(*p.last().unwrap(), Cell::new(5, 2));
        let mut prev = Cell::new(0, 0);
        for c in p {
            assert_eq!(prev.chebyshev(c), 1);
            prev = c;
        }
        assert!(line(Cell::new(3, 3), Cell::new(3, 3)).is_empty());
    }
}
