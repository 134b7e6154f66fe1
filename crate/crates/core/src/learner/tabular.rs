use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::features::{ActionMask, FeatureVector};
use crate::game::ACTION_COUNT;

pub type StateKey = u64;

/// Rounds `v * scale` and clamps it to `-limit..=limit`; values beyond the
/// limit map to an extra "far" bucket.
fn bucket(v: f64, scale: f64, limit: i64) -> u64 {
    let c = (v * scale).round() as i64;
    if c.abs() > limit {
        (2 * limit + 1) as u64
    } else {
        (c + limit) as u64
    }
}

fn bin(v: f64, lo: f64, hi: f64, bins: u64) -> u64 {
    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    ((t * bins as f64) as u64).min(bins - 1)
}

struct Packer(u64);

impl Packer {
    fn push(&mut self, value: u64, radix: u64) {
        debug_assert!(value < radix);
        self.0 = self.0 * radix + value;
    }
}

/// Coarse discretisation of a complex feature vector: own zone on a 6x3
/// grid, goal distance, ball ownership, the ball and nearest players
/// relative to the agent (within two cells, else "far"), and the agent id
/// when one table is shared.
pub fn state_key(fv: &FeatureVector, width: i32, height: i32, with_identity: bool) -> StateKey {
    let g = |b: &str, f: &str| fv.get(b, f).unwrap_or(0.0);
    let (w, h) = (f64::from(width), f64::from(height));
    let mut k = Packer(1);
    k.push(bin(g("player", "x"), -1.0, 1.0, 6), 6);
    k.push(bin(g("player", "y"), -1.0, 1.0, 3), 3);
    k.push(((g("player", "goal_distance") * w).round() as u64).min(4), 5);
    let ownership = if g("ball", "owned_by_me") > 0.5 {
        0
    } else if g("ball", "owned_own_team") > 0.5 {
        1
    } else if g("ball", "owned_opponent") > 0.5 {
        2
    } else if g("ball", "in_flight") > 0.5 {
        3
    } else {
        4
    };
    k.push(ownership, 5);
    k.push(bucket(g("ball", "rel_x"), w, 2), 6);
    k.push(bucket(g("ball", "rel_y"), h, 2), 6);
    k.push(bucket(g("closest_opponent", "rel_x"), w, 2), 6);
    k.push(bucket(g("closest_opponent", "rel_y"), h, 2), 6);
    if fv.block("teammates").is_some_and(|b| !b.is_empty()) {
        k.push(bucket(g("closest_teammate", "rel_x"), w, 2), 6);
        k.push(bucket(g("closest_teammate", "rel_y"), h, 2), 6);
    }
    if with_identity {
        let id = fv.block("identity").and_then(|b| b.iter().position(|&x| x > 0.5)).unwrap_or(0);
        k.push(id as u64, 16);
    }
    k.0
}

/// Action-value table; missing states read as all zeros.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QTable {
    entries: BTreeMap<StateKey, [f64; ACTION_COUNT]>,
}

impl QTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self, key: StateKey) -> [f64; ACTION_COUNT] {
        self.entries.get(&key).copied().unwrap_or([0.0; ACTION_COUNT])
    }

    pub fn max_value(&self, key: StateKey, mask: &ActionMask) -> f64 {
        let q = self.values(key);
        mask.as_slice()
            .iter()
            .zip(q)
            .filter(|(ok, _)| **ok)
            .map(|(_, v)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Moves `Q(key, action)` a step of size `lr` towards `target`.
    pub fn update(&mut self, key: StateKey, action: usize, target: f64, lr: f64) {
        let q = self.entries.entry(key).or_insert([0.0; ACTION_COUNT]);
        q[action] += lr * (target - q[action]);
    }

    pub fn is_finite(&self) -> bool {
        self.entries.values().flatten().all(|v| v.is_finite())
    }
}

/// Highest preference among allowed actions, lowest index on ties.
pub fn greedy(prefs: &[f64], mask: &ActionMask) -> usize {
    let mut best: Option<usize> = None;
    for (i, (&ok, &v)) in mask.as_slice().iter().zip(prefs).enumerate() {
        if ok && best.is_none_or(|b| v > prefs[b]) {
            best = Some(i);
        }
    }
    best.unwrap_or(0)
}

/// Epsilon-greedy choice restricted to the mask.
pub fn act_preferences(prefs: &[f64], mask: &ActionMask, epsilon: f64, rng: &mut impl Rng) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        let allowed: Vec<usize> = (0..ACTION_COUNT).filter(|&i| mask.as_slice()[i]).collect();
        if allowed.is_empty() {
            return 0;
        }
        return allowed[rng.random_range(0..allowed.len())];
    }
    greedy(prefs, mask)
}
