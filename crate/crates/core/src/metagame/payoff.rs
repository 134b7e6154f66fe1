use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::MetagameError;
use crate::scalar::Scalar;

/// Aggregated result of a batch of games, from the first policy's side.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchOutcome<T> {
    pub wins: u64,
    pub draws: u64,
    pub losses: u64,
    /// Sum of per-game goal differences.
    pub goal_diff: T,
}

impl<T: Scalar> MatchOutcome<T> {
    pub fn games(&self) -> u64 {
        self.wins + self.draws + self.losses
    }

    pub fn flipped(&self) -> Self {
        Self {
            wins: self.losses,
            draws: self.draws,
            losses: self.wins,
            goal_diff: -self.goal_diff,
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.wins += other.wins;
        self.draws += other.draws;
        self.losses += other.losses;
        self.goal_diff += other.goal_diff;
    }

    /// Win rate counting draws as half a win.
    pub fn score_rate(&self) -> T {
        if self.games() == 0 {
            return T::lit(0.5);
        }
        (T::from_count(self.wins as usize) + T::lit(0.5) * T::from_count(self.draws as usize))
            / T::from_count(self.games() as usize)
    }

    /// Plain win rate, draws count as non-wins.
    pub fn win_rate(&self) -> T {
        if self.games() == 0 {
            return T::zero();
        }
        T::from_count(self.wins as usize) / T::from_count(self.games() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PayoffRecord<T> {
    pub games: u64,
    pub wins: u64,
    pub draws: u64,
    pub losses: u64,
    pub goal_diff_sum: T,
}

impl<T: Scalar> PayoffRecord<T> {
    pub fn mean_goal_diff(&self) -> T {
        if self.games == 0 {
            T::zero()
        } else {
            self.goal_diff_sum / T::from_count(self.games as usize)
        }
    }

    /// `(wins - losses) / games`, 0 when nothing was played.
    pub fn win_metric(&self) -> T {
        if self.games == 0 {
            T::zero()
        } else {
            (T::from_count(self.wins as usize) - T::from_count(self.losses as usize))
                / T::from_count(self.games as usize)
        }
    }

    fn add(&mut self, o: &MatchOutcome<T>) {
        self.games += o.games();
        self.wins += o.wins;
        self.draws += o.draws;
        self.losses += o.losses;
        self.goal_diff_sum += o.goal_diff;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffMetric {
    WinRate,
    GoalDifference,
}

/// Pairwise simulation results of a population. Entry `(i, j)` is stored
/// from `i`'s side, so `(j, i)` always mirrors it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffTable<T> {
    ids: Vec<String>,
    entries: Vec<Vec<PayoffRecord<T>>>,
}

impl<T: Scalar> Default for PayoffTable<T> {
    fn default() -> Self {
        Self { ids: Vec::new(), entries: Vec::new() }
    }
}

impl<T: Scalar> PayoffTable<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn add_policy(&mut self, id: &str) -> Result<usize, MetagameError> {
        if self.index_of(id).is_some() {
            return Err(MetagameError::DuplicatePolicy(id.to_string()));
        }
        self.ids.push(id.to_string());
        for row in &mut self.entries {
            row.push(PayoffRecord::default());
        }
        self.entries.push(vec![PayoffRecord::default(); self.ids.len()]);
        Ok(self.ids.len() - 1)
    }

    fn idx(&self, id: &str) -> Result<usize, MetagameError> {
        self.index_of(id).ok_or_else(|| MetagameError::UnknownPolicy(id.to_string()))
    }

    /// Records games of `a` against `b`, seen from `a`. Self-play games are
    /// recorded from both seats.
    pub fn record(&mut self, a: &str, b: &str, outcome: &MatchOutcome<T>) -> Result<(), MetagameError> {
        let (i, j) = (self.idx(a)?, self.idx(b)?);
        self.entries[i][j].add(outcome);
        self.entries[j][i].add(&outcome.flipped());
        Ok(())
    }

    pub fn entry(&self, a: &str, b: &str) -> Result<&PayoffRecord<T>, MetagameError> {
        Ok(&self.entries[self.idx(a)?][self.idx(b)?])
    }

    pub fn entry_at(&self, i: usize, j: usize) -> &PayoffRecord<T> {
        &self.entries[i][j]
    }

    pub fn matrix(&self, metric: PayoffMetric) -> Vec<Vec<T>> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| match metric {
                        PayoffMetric::WinRate => e.win_metric(),
                        PayoffMetric::GoalDifference => e.mean_goal_diff(),
                    })
                    .collect()
            })
            .collect()
    }

    /// Win rate of `a` over `b` with draws as half wins; 0.5 if unplayed.
    pub fn score_rate(&self, a: &str, b: &str) -> Result<T, MetagameError> {
        let e = self.entry(a, b)?;
        Ok(MatchOutcome { wins: e.wins, draws: e.draws, losses: e.losses, goal_diff: e.goal_diff_sum }.score_rate())
    }

    pub fn to_csv(&self, metric: PayoffMetric) -> String {
        let mut out = String::from("policy");
        for id in &self.ids {
            write!(out, ",{id}").unwrap();
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(self.matrix(metric)) {
            out.push_str(id);
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Convenience: the payoff matrix under `metric`.
pub fn payoff_matrix<T: Scalar>(table: &PayoffTable<T>, metric: PayoffMetric) -> Vec<Vec<T>> {
    table.matrix(metric)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(w: u64, d: u64, l: u64, gd: f64) -> MatchOutcome<f64> {
        MatchOutcome { wins: w, draws: d, losses: l, goal_diff: gd }
    }

    #[test]
    fn win_metric_examples() {
        let mut t = PayoffTable::new();
        t.add_policy("a").unwrap();
        t.add_policy("b").unwrap();
        t.record("a", "b", &outcome(3, 0, 1, 4.0)).unwrap();
        let m = payoff_matrix(&t, PayoffMetric::WinRate);
        assert_eq!(m[0][1], 0.5);
        assert_eq!(m[1][0], -0.5);
        let g = t.matrix(PayoffMetric::GoalDifference);
        assert_eq!(g[0][1], 1.0);
        assert_eq!(t.entry("a", "b").unwrap().wins, t.entry("b", "a").unwrap().losses);
    }

    #[test]
    fn draws_and_self_play() {
        let mut t = PayoffTable::new();
        t.add_policy("a").unwrap();
        t.add_policy("b").unwrap();
        t.record("a", "b", &outcome(0, 5, 0, 0.0)).unwrap();
        t.record("a", "a", &outcome(2, 0, 1, 1.0)).unwrap();
        let m = t.matrix(PayoffMetric::WinRate);
        assert_eq!(m[0][1], 0.0);
        assert_eq!(m[0][0], 0.0);
        assert_eq!(t.entry("a", "a").unwrap().games, 6);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m[i][j] + m[j][i], 0.0);
            }
        }
    }

    #[test]
    fn ids_are_unique_and_known() {
        let mut t = PayoffTable::<f64>::new();
        t.add_policy("a").unwrap();
        assert!(t.add_policy("a").is_err());
        assert!(t.record("a", "zz", &MatchOutcome::default()).is_err());
        assert_eq!(t.to_csv(PayoffMetric::WinRate), "policy,a\na,0\n");
    }
}
