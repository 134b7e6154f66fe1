//! Deterministic randomness.
//!
//! The environment draws from a counter-based stream: every draw is a pure
//! function of `(seed, step, kind, index)`, so an episode replays bit-for-bit
//! no matter which thread runs it or in which order other environments step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a draw is used for. Part of the key so that unrelated draws in the
/// same step never share a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum DrawKind {
    Slide = 1,
    Shot = 2,
    Intercept = 3,
    Pickup = 4,
    Restart = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes an arbitrary list of words into one 64-bit key.
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x243F_6A88_85A3_08D3, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Counter-based uniform source keyed on the episode seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&self, step: u64, kind: DrawKind, index: u64) -> f64 {
        let bits = mix(&[self.seed, step, kind as u64, index]);
        (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&self, step: u64, kind: DrawKind, index: u64, p: f64) -> bool {
        self.uniform(step, kind, index) < p
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn pick(&self, step: u64, kind: DrawKind, index: u64, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform(step, kind, index) * n as f64) as usize).min(n - 1)
    }
}

/// Sequential generator for learners, samplers and workers.
pub fn seeded(words: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(words))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_pure_functions_of_the_key() {
        let a = CounterRng::new(7);
        let b = CounterRng::new(7);
        for step in 0..100 {
            assert_eq!(
                a.uniform(step, DrawKind::Shot, 0),
                b.uniform(step, DrawKind::Shot, 0)
            );
        }
        assert_ne!(a.uniform(3, DrawKind::Shot, 0), a.uniform(3, DrawKind::Slide, 0));
        assert_ne!(a.uniform(3, DrawKind::Shot, 0), CounterRng::new(8).uniform(3, DrawKind::Shot, 0));
    }

    #[test]
    fn uniform_is_roughly_uniform() {
        let r = CounterRng::new(1);
        let n = 20_000;
        let mean: f64 = (0..n).map(|i| r.uniform(i, DrawKind::Pickup, 0)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
        assert!((0..n).all(|i| r.pick(i, DrawKind::Pickup, 1, 3) < 3));
    }
}
