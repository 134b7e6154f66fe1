use std::collections::{BTreeMap, BTreeSet};

use pitchleague::metagame::{elo_update, ELO_INITIAL, ELO_K};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmissionStatus {
    Pending,
    Active,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    pub user: String,
    pub scenario: String,
    pub policy_id: String,
    /// Milliseconds since the Unix epoch.
    pub received_ms: u64,
    pub status: SubmissionStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standing {
    pub score: f64,
    pub elo: f64,
    pub matches: u32,
    pub byes: u32,
    /// Opponents met in Swiss rounds.
    pub opponents: BTreeSet<String>,
}

impl Default for Standing {
    fn default() -> Self {
        Self { score: 0.0, elo: ELO_INITIAL, matches: 0, byes: 0, opponents: BTreeSet::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub id: String,
    pub scenario: String,
    /// `None` for placement matches.
    pub round: Option<u32>,
    pub a: String,
    pub b: String,
    pub episodes: u64,
    pub wins: u64,
    pub draws: u64,
    pub losses: u64,
    pub goal_diff: i64,
    pub seed: u64,
}

impl MatchRecord {
    /// 1, 0.5 or 0 for `a` by total goal difference.
    pub fn score_a(&self) -> f64 {
        match self.goal_diff.signum() {
            1 => 1.0,
            0 => 0.5,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub a: String,
    pub b: String,
    pub match_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub scenario: String,
    pub round: u32,
    pub weight: f64,
    pub pairings: Vec<Pairing>,
    pub bye: Option<String>,
    pub round_scores: BTreeMap<String, f64>,
}

/// One line of the match log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Submitted(Submission),
    Placed { id: String },
    Match(MatchRecord),
    Round(RoundResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub id: String,
    pub user: String,
    pub status: SubmissionStatus,
    pub score: f64,
    pub elo: f64,
    pub matches: u32,
}

/// Everything the service knows; a pure fold over the event log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub events: u64,
    pub submissions: BTreeMap<String, Submission>,
    pub standings: BTreeMap<String, BTreeMap<String, Standing>>,
    pub matches: BTreeMap<String, MatchRecord>,
    pub rounds: BTreeMap<String, Vec<RoundResult>>,
}

impl State {
    pub fn apply(&mut self, event: &Event) {
        self.events += 1;
        match event {
            Event::Submitted(s) => {
                self.standings.entry(s.scenario.clone()).or_default().insert(s.id.clone(), Standing::default());
                self.submissions.insert(s.id.clone(), s.clone());
            }
            Event::Placed { id } => {
                if let Some(s) = self.submissions.get_mut(id) {
                    s.status = SubmissionStatus::Active;
                }
            }
            Event::Match(m) => {
                let table = self.standings.entry(m.scenario.clone()).or_default();
                let ra = table.get(&m.a).map_or(ELO_INITIAL, |s| s.elo);
                let rb = table.get(&m.b).map_or(ELO_INITIAL, |s| s.elo);
                let (na, nb) = elo_update(ra, rb, m.score_a(), ELO_K);
                for (id, other, elo) in [(&m.a, &m.b, na), (&m.b, &m.a, nb)] {
                    let s = table.entry(id.clone()).or_default();
                    s.elo = elo;
                    s.matches += 1;
                    if m.round.is_some() {
                        s.opponents.insert(other.clone());
                    }
                }
                self.matches.insert(m.id.clone(), m.clone());
            }
            Event::Round(r) => {
                let table = self.standings.entry(r.scenario.clone()).or_default();
                for (id, score) in &r.round_scores {
                    table.entry(id.clone()).or_default().score += r.weight * score;
                }
                if let Some(b) = &r.bye {
                    table.entry(b.clone()).or_default().byes += 1;
                }
                self.rounds.entry(r.scenario.clone()).or_default().push(r.clone());
            }
        }
    }

    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a Event>) -> Self {
        let mut s = Self::default();
        for e in events {
            s.apply(e);
        }
        s
    }

    /// Ordered by accumulated score, then Elo (both descending), then id.
    pub fn ranking(&self, scenario: &str) -> Vec<RankEntry> {
        let Some(table) = self.standings.get(scenario) else {
            return Vec::new();
        };
        let mut rows: Vec<_> = table.iter().collect();
        rows.sort_by(|(ia, a), (ib, b)| b.score.total_cmp(&a.score).then(b.elo.total_cmp(&a.elo)).then(ia.cmp(ib)));
        rows.into_iter()
            .enumerate()
            .map(|(k, (id, s))| {
                let sub = &self.submissions[id];
                RankEntry {
                    rank: k + 1,
                    id: id.clone(),
                    user: sub.user.clone(),
                    status: sub.status,
                    score: s.score,
                    elo: s.elo,
                    matches: s.matches,
                }
            })
            .collect()
    }

    pub fn next_submission_id(&self) -> String {
        format!("s{:05}", self.submissions.len() + 1)
    }

    pub fn next_match_id(&self) -> String {
        format!("m{:06}", self.matches.len() + 1)
    }

    pub fn next_round(&self, scenario: &str) -> u32 {
        self.rounds.get(scenario).map_or(0, Vec::len) as u32 + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn submitted(id: &str) -> Event {
        Event::Submitted(Submission {
            id: id.into(),
            user: "u".into(),
            scenario: "x".into(),
            policy_id: id.into(),
            received_ms: 0,
            status: SubmissionStatus::Pending,
        })
    }

    fn round(weight: f64, scores: &[(&str, f64)]) -> Event {
        Event::Round(RoundResult {
            scenario: "x".into(),
            round: 0,
            weight,
            pairings: Vec::new(),
            bye: None,
            round_scores: scores.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        })
    }

    #[test]
    fn weighted_rounds_favour_late_wins() {
        let mut s = State::from_events(&[submitted("a"), submitted("b")]);
        for e in [round(1.0, &[("a", 1.0), ("b", 0.0)]), round(1.0, &[("a", 0.0), ("b", 0.0)]), round(2.0, &[("a", 0.0), ("b", 1.0)])] {
            s.apply(&e);
        }
        let r = s.ranking("x");
        assert_eq!((r[0].id.as_str(), r[0].score), ("b", 2.0));
        assert_eq!(r[1].score, 1.0);
    }

    #[test]
    fn ranking_edge_cases() {
        assert!(State::default().ranking("x").is_empty());
        let s = State::from_events(&[submitted("a")]);
        let r = s.ranking("x");
        assert_eq!((r[0].rank, r[0].matches), (1, 0));
        // Ties fall back to id order.
        let s = State::from_events(&[submitted("b"), submitted("a")]);
        assert_eq!(s.ranking("x")[0].id, "a");
    }

    #[test]
    fn a_win_puts_the_winner_first() {
        let mut s = State::from_events(&[submitted("a"), submitted("b")]);
        s.apply(&Event::Match(MatchRecord {
            id: "m1".into(),
            scenario: "x".into(),
            round: None,
            a: "b".into(),
            b: "a".into(),
            episodes: 1,
            wins: 1,
            draws: 0,
            losses: 0,
            goal_diff: 1,
            seed: 0,
        }));
        let r = s.ranking("x");
        assert_eq!(r[0].id, "b");
        assert_eq!(r[0].elo + r[1].elo, 2.0 * ELO_INITIAL);
    }
}
