use serde::{Deserialize, Serialize};

use super::{AnalysisError, Replay};
use crate::game::pitch::{Event, PlayerRef};
use crate::game::Team;

/// A player's possession from `start` to `end` inclusive. Loose-ball
/// steps inside the span are not owned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub player: PlayerRef,
    pub start: u32,
    pub end: u32,
    pub owned: u32,
    pub shots: u32,
}

impl Node {
    pub fn steps(&self) -> u32 {
        self.owned
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub team: Team,
    pub nodes: Vec<Node>,
}

/// Play between two score changes, steps inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgame {
    pub start: u32,
    pub end: u32,
    /// Team that scored at `end`, if the subgame ended with a goal.
    pub goal: Option<Team>,
    pub chains: Vec<Chain>,
}

impl Subgame {
    /// The chain that ended in the goal, if any.
    pub fn scoring_chain(&self) -> Option<&Chain> {
        let team = self.goal?;
        self.chains.last().filter(|c| c.team == team)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchDecomposition {
    pub subgames: Vec<Subgame>,
}

impl MatchDecomposition {
    /// `(step the receiver took over, passer, receiver)` for every pass.
    pub fn passes(&self) -> Vec<(u32, PlayerRef, PlayerRef)> {
        let mut out = Vec::new();
        for c in self.subgames.iter().flat_map(|s| &s.chains) {
            for w in c.nodes.windows(2) {
                out.push((w[1].start, w[0].player, w[1].player));
            }
        }
        out
    }

    /// `(goal step, assisting player)` for every assist.
    pub fn assists(&self) -> Vec<(u32, PlayerRef)> {
        self.subgames
            .iter()
            .filter_map(|s| {
                let nodes = &s.scoring_chain()?.nodes;
                (nodes.len() >= 2).then(|| (s.end, nodes[nodes.len() - 2].player))
            })
            .collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.subgames.iter().flat_map(|s| &s.chains).flat_map(|c| &c.nodes)
    }
}

/// Splits a replay at score changes (subgames), team possession changes
/// (chains) and player possession changes (nodes). A played ball still
/// counts as the passer's until someone collects it; steps with no owner
/// belong to no node, and a player regaining their own loose ball keeps
/// their node.
pub fn decompose(replay: &Replay) -> Result<MatchDecomposition, AnalysisError> {
    let mut out = MatchDecomposition::default();
    let mut current: Option<Subgame> = None;
    for (k, rec) in replay.steps.iter().enumerate() {
        let step = rec.step;
        rec.state
            .check_invariants()
            .map_err(|message| AnalysisError::Ownership { step, message })?;
        let sub = current.get_or_insert_with(|| Subgame { start: step, end: step, goal: None, chains: Vec::new() });
        sub.end = step;
        if let Some(owner) = rec.state.effective_owner() {
            match sub.chains.last_mut() {
                Some(c) if c.team == owner.team => {
                    let last = c.nodes.last_mut().expect("chains are never empty");
                    if last.player == owner {
                        last.end = step;
                        last.owned += 1;
                    } else {
                        c.nodes.push(Node { player: owner, start: step, end: step, owned: 1, shots: 0 });
                    }
                }
                _ => sub.chains.push(Chain {
                    team: owner.team,
                    nodes: vec![Node { player: owner, start: step, end: step, owned: 1, shots: 0 }],
                }),
            }
        }
        for e in &rec.events {
            if let Event::Shot { shooter, .. } = e {
                let node = sub
                    .chains
                    .last_mut()
                    .and_then(|c| c.nodes.last_mut())
                    .filter(|n| n.player == *shooter && n.end == step)
                    .ok_or_else(|| AnalysisError::Ownership { step, message: "shot by a player not in possession".into() })?;
                node.shots += 1;
            }
        }
        let before = rec.state.score;
        let after = replay.score_after(k);
        if after != before {
            sub.goal = Some(if after.0 > before.0 { Team::Left } else { Team::Right });
            out.subgames.push(current.take().expect("subgame open"));
        }
    }
    out.subgames.extend(current);
    Ok(out)
}

/// Per-team counters, indexed by `Team::index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventCounts {
    pub passes: [u32; 2],
    pub intercepts: [u32; 2],
    pub assists: [u32; 2],
    pub shots: [u32; 2],
    pub goals: [u32; 2],
    pub possession_steps: [u32; 2],
}

/// Passes are node transitions within a chain, intercepts are chain
/// transitions within a subgame (credited to the team gaining the ball),
/// and an assist is the pass from the second-to-last to the last node of a
/// chain ending in a goal.
pub fn detect_events(d: &MatchDecomposition) -> EventCounts {
    let mut n = EventCounts::default();
    for s in &d.subgames {
        for (i, c) in s.chains.iter().enumerate() {
            let t = c.team.index();
            n.passes[t] += c.nodes.len() as u32 - 1;
            if i > 0 {
                n.intercepts[t] += 1;
            }
            for node in &c.nodes {
                n.shots[t] += node.shots;
                n.possession_steps[t] += node.steps();
            }
        }
        if let Some(team) = s.goal {
            n.goals[team.index()] += 1;
            if s.scoring_chain().is_some_and(|c| c.nodes.len() >= 2) {
                n.assists[team.index()] += 1;
            }
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{ReplayHeader, StepRecord};
    use crate::game::pitch::{MiniPitch, PitchConfig, RawObservation};

    fn base() -> (PitchConfig, RawObservation) {
        let config = PitchConfig { keepers: false, ..PitchConfig::default() };
        let obs = MiniPitch::new(config.clone()).unwrap().reset(1);
        (config, obs)
    }

    /// Builds a replay from a per-step (owner, goal) script.
    fn scripted(script: &[(Option<PlayerRef>, Option<Team>)]) -> Replay {
        let (config, obs) = base();
        let mut r = Replay::new(ReplayHeader::new(&config, "a", "b", 1));
        let mut score = (0, 0);
        for (k, &(owner, goal)) in script.iter().enumerate() {
            let mut s = obs.clone();
            s.step_index = k as u32;
            s.score = score;
            s.ball.owned_team = owner.map(|p| p.team);
            s.ball.owned_player = owner.map(|p| p.index);
            s.ball.in_flight_from = None;
            if let Some(p) = owner {
                s.ball.position = s.player(p).unwrap().position;
            }
            let mut events = Vec::new();
            if let Some(team) = goal {
                let scorer = owner.unwrap();
                events.push(Event::Shot { shooter: scorer, probability: 1.0, scored: true });
                events.push(Event::Goal { team, scorer });
                match team {
                    Team::Left => score.0 += 1,
                    Team::Right => score.1 += 1,
                }
            }
            r.push(StepRecord { step: k as u32, state: s, actions: [vec![0; 3], vec![0; 3]], rewards: [0.0; 2], events });
        }
        r
    }

    fn l(i: usize) -> Option<PlayerRef> {
        Some(PlayerRef::new(Team::Left, i))
    }

    fn r(i: usize) -> Option<PlayerRef> {
        Some(PlayerRef::new(Team::Right, i))
    }

    #[test]
    fn no_boundaries() {
        let d = decompose(&scripted(&[(l(2), None); 10])).unwrap();
        assert_eq!(d.subgames.len(), 1);
        assert_eq!(d.subgames[0].chains.len(), 1);
        assert_eq!(d.subgames[0].chains[0].nodes[0].steps(), 10);
    }

    #[test]
    fn goals_split_subgames() {
        let mut s = vec![(l(2), None); 200];
        s[40].1 = Some(Team::Left);
        s[120] = (r(1), Some(Team::Right));
        let d = decompose(&scripted(&s)).unwrap();
        let bounds: Vec<(u32, u32)> = d.subgames.iter().map(|g| (g.start, g.end)).collect();
        assert_eq!(bounds, vec![(0, 40), (41, 120), (121, 199)]);
    }

    #[test]
    fn pass_then_goal_is_an_assist() {
        let mut s = vec![(l(1), None); 3];
        s.extend(vec![(l(2), None); 2]);
        s.push((l(2), Some(Team::Left)));
        let d = decompose(&scripted(&s)).unwrap();
        let n = detect_events(&d);
        assert_eq!(n.passes, [1, 0]);
        assert_eq!(n.assists, [1, 0]);
        assert_eq!(n.goals, [1, 0]);
        assert_eq!(n.shots, [1, 0]);
        assert_eq!(d.assists(), vec![(5, PlayerRef::new(Team::Left, 1))]);
        assert_eq!(d.passes(), vec![(3, PlayerRef::new(Team::Left, 1), PlayerRef::new(Team::Left, 2))]);
    }

    #[test]
    fn solo_goal_and_intercepts() {
        let s = [(l(1), None), (r(0), None), (None, None), (l(2), None), (l(2), Some(Team::Left))];
        let d = decompose(&scripted(&s)).unwrap();
        let n = detect_events(&d);
        assert_eq!(d.subgames[0].chains.len(), 3);
        assert_eq!(n.intercepts, [1, 1]);
        assert_eq!(n.assists, [0, 0]);
        assert_eq!(n.possession_steps, [3, 1]);
    }

    #[test]
    fn regaining_a_loose_ball_keeps_the_node() {
        let d = decompose(&scripted(&[(l(2), None), (None, None), (l(2), None), (None, None), (l(1), None)])).unwrap();
        let nodes = &d.subgames[0].chains[0].nodes;
        assert_eq!(nodes.len(), 2);
        assert_eq!((nodes[0].start, nodes[0].end, nodes[0].owned), (0, 2, 2));
        assert_eq!(detect_events(&d).passes, [1, 0]);
        assert_eq!(detect_events(&d).possession_steps, [3, 0]);
    }

    #[test]
    fn flight_belongs_to_the_passer() {
        let (_, obs) = base();
        let mut rep = scripted(&[(l(1), None), (l(1), None), (l(2), None)]);
        rep.steps[1].state.ball.owned_team = None;
        rep.steps[1].state.ball.owned_player = None;
        rep.steps[1].state.ball.in_flight_from = l(1);
        rep.steps[1].state.ball.position = obs.ball.position;
        let d = decompose(&rep).unwrap();
        let nodes = &d.subgames[0].chains[0].nodes;
        assert_eq!((nodes[0].start, nodes[0].end), (0, 1));
        assert_eq!(nodes[1].start, 2);
    }

    #[test]
    fn two_owners_is_an_error() {
        let mut rep = scripted(&[(l(1), None)]);
        rep.steps[0].state.ball.in_flight_from = l(2);
        assert!(decompose(&rep).is_err());
    }
}
