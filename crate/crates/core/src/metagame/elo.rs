use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::scalar::Scalar;

pub const ELO_INITIAL: f64 = 1000.0;
pub const ELO_K: f64 = 32.0;

/// Expected score of `a` against `b`: `1 / (1 + 10^((rb - ra) / 400))`.
pub fn elo_expected<T: Scalar>(ra: T, rb: T) -> T {
    T::one() / (T::one() + T::lit(10.0).powf((rb - ra) / T::lit(400.0)))
}

/// One pairwise update; `outcome_a` is 1, 0.5 or 0.
///
/// The rating change is rounded to a multiple of `epsilon * 2^14` so that,
/// for ratings on that grid below `2^15`, both additions are exact and
/// `ra' + rb' == ra + rb` holds bit for bit.
pub fn elo_update<T: Scalar>(ra: T, rb: T, outcome_a: T, k: T) -> (T, T) {
    let ea = elo_expected(ra, rb);
    let quantum = T::epsilon() * T::lit(16384.0);
    let delta = (k * (outcome_a - ea) / quantum).round() * quantum;
    (ra + delta, rb - delta)
}

/// A logged game for rating purposes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EloGame<T> {
    pub timestamp: u64,
    pub a: String,
    pub b: String,
    pub score_a: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EloTable<T> {
    ratings: BTreeMap<String, T>,
    k: T,
    /// `(update index, id, rating after the update)`.
    history: Vec<(usize, String, T)>,
    updates: usize,
}

impl<T: Scalar> Default for EloTable<T> {
    fn default() -> Self {
        Self::new(T::lit(ELO_K))
    }
}

impl<T: Scalar> EloTable<T> {
    pub fn new(k: T) -> Self {
        Self { ratings: BTreeMap::new(), k, history: Vec::new(), updates: 0 }
    }

    pub fn add(&mut self, id: &str) {
        self.ratings.entry(id.to_string()).or_insert_with(|| T::lit(ELO_INITIAL));
    }

    pub fn rating(&self, id: &str) -> T {
        self.ratings.get(id).copied().unwrap_or_else(|| T::lit(ELO_INITIAL))
    }

    pub fn ratings(&self) -> &BTreeMap<String, T> {
        &self.ratings
    }

    pub fn record(&mut self, a: &str, b: &str, score_a: T) {
        self.add(a);
        self.add(b);
        let (ra, rb) = elo_update(self.rating(a), self.rating(b), score_a, self.k);
        self.ratings.insert(a.to_string(), ra);
        self.ratings.insert(b.to_string(), rb);
        self.updates += 1;
        self.history.push((self.updates, a.to_string(), ra));
        self.history.push((self.updates, b.to_string(), rb));
    }

    /// Folds a game log in timestamp order; games sharing a timestamp are
    /// shuffled with `tie_seed`.
    pub fn from_log(games: &[EloGame<T>], k: T, tie_seed: u64) -> Self {
        let mut order: Vec<usize> = (0..games.len()).collect();
        order.sort_by_key(|&i| games[i].timestamp);
        let mut rng = seeded(&[tie_seed]);
        let mut start = 0;
        while start < order.len() {
            let ts = games[order[start]].timestamp;
            let end = order[start..].iter().position(|&i| games[i].timestamp != ts).map_or(order.len(), |p| start + p);
            order[start..end].shuffle(&mut rng);
            start = end;
        }
        let mut table = Self::new(k);
        for i in order {
            let g = &games[i];
            table.record(&g.a, &g.b, g.score_a);
        }
        table
    }

    pub fn history_csv(&self) -> String {
        let mut out = String::from("update,policy,elo\n");
        for (u, id, r) in &self.history {
            writeln!(out, "{u},{id},{r}").unwrap();
        }
        out
    }

    pub fn ratings_csv(&self) -> String {
        let mut out = String::from("policy,elo\n");
        for (id, r) in &self.ratings {
            writeln!(out, "{id},{r}").unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draw_between_equals_is_a_no_op() {
        assert_eq!(elo_update(1000.0, 1000.0, 0.5, 32.0), (1000.0, 1000.0));
    }

    #[test]
    fn win_between_equals() {
        assert_eq!(elo_update(1000.0, 1000.0, 1.0, 32.0), (1016.0, 984.0));
    }

    #[test]
    fn favourite_wins() {
        let (ra, rb) = elo_update(1200.0f64, 1000.0, 1.0, 32.0);
        let ea = 1.0 / (1.0 + 10f64.powf(-0.5));
        assert!((ea - 0.7597).abs() < 1e-4);
        assert!((ra - (1200.0 + 32.0 * (1.0 - ea))).abs() < 1e-9);
        assert!((ra - 1207.69).abs() < 0.01);
        assert_eq!(ra + rb, 2200.0);
    }

    #[test]
    fn pair_sum_is_conserved_exactly() {
        let mut rng = crate::rng::seeded(&[3]);
        use rand::Rng;
        let mut t = EloTable::<f64>::default();
        for _ in 0..5000 {
            let a = format!("p{}", rng.random_range(0..7));
            let b = format!("p{}", rng.random_range(0..7));
            if a == b {
                continue;
            }
            let before = t.rating(&a) + t.rating(&b);
            t.record(&a, &b, [0.0, 0.5, 1.0][rng.random_range(0..3)]);
            assert_eq!(t.rating(&a) + t.rating(&b), before);
        }
        t.add("p0");
        assert_eq!(t.ratings().values().sum::<f64>(), 7000.0);
    }

    #[test]
    fn log_fold_is_reproducible() {
        let games: Vec<EloGame<f64>> = (0..20)
            .map(|i| EloGame { timestamp: i / 4, a: format!("p{}", i % 3), b: format!("p{}", (i + 1) % 3), score_a: (i % 3) as f64 / 2.0 })
            .collect();
        let a = EloTable::from_log(&games, 32.0, 9);
        let b = EloTable::from_log(&games, 32.0, 9);
        assert_eq!(a, b);
        let total: f64 = a.ratings().values().sum();
        assert!((total - 3000.0).abs() < 1e-9);
    }
}
