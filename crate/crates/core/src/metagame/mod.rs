//! The empirical game over a population: payoff tables, Nash mixtures,
//! exploitability, Elo ratings and PFSP opponent distributions.
//!
//! Everything here is generic over [`Scalar`](crate::Scalar).

mod elo;
mod nash;
mod payoff;
mod pfsp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use elo::{elo_expected, elo_update, EloGame, EloTable, ELO_INITIAL, ELO_K};
pub use nash::{best_response_value, exploitability, solve_nash, NashConfig, NashSolution};
pub use payoff::{payoff_matrix, MatchOutcome, PayoffMetric, PayoffRecord, PayoffTable};
pub use pfsp::{pfsp_distribution, PfspWeighting};

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetagameError {
    #[error("matrix must be non-empty, rectangular and finite")]
    BadMatrix,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("not a probability vector: {0}")]
    NotAProbability(String),
    #[error("unknown policy id {0:?}")]
    UnknownPolicy(String),
    #[error("duplicate policy id {0:?}")]
    DuplicatePolicy(String),
}

/// Probability distribution over a finite set (strategies or policies).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy<T> {
    probs: Vec<T>,
}

impl<T: Scalar> MixedStrategy<T> {
    /// Tolerance on the total mass, scaled for single precision.
    pub fn mass_tolerance(len: usize) -> T {
        T::lit(1e-9).max(T::epsilon() * T::from_count(4 * len.max(1)))
    }

    pub fn new(probs: Vec<T>) -> Result<Self, MetagameError> {
        if probs.is_empty() {
            return Err(MetagameError::NotAProbability("empty".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < T::zero()) {
            return Err(MetagameError::NotAProbability(format!("{probs:?}")));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > Self::mass_tolerance(probs.len()) {
            return Err(MetagameError::NotAProbability(format!("sums to {total}")));
        }
        Ok(Self { probs })
    }

    /// Normalises nonnegative weights; all-zero weights give the uniform mix.
    pub fn from_weights(weights: &[T]) -> Result<Self, MetagameError> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(MetagameError::NotAProbability(format!("{weights:?}")));
        }
        let total: T = weights.iter().copied().sum();
        if total <= T::zero() {
            return Ok(Self::uniform(weights.len()));
        }
        Ok(Self { probs: weights.iter().map(|&w| w / total).collect() })
    }

    pub fn uniform(n: usize) -> Self {
        let p = T::one() / T::from_count(n);
        Self { probs: vec![p; n] }
    }

    pub fn pure(n: usize, index: usize) -> Self {
        let mut probs = vec![T::zero(); n];
        probs[index] = T::one();
        Self { probs }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index drawn with inverse-CDF sampling from a uniform `u` in `[0, 1)`.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p.as_f64();
            if u < acc {
                return i;
            }
        }
        self.probs.iter().rposition(|p| *p > T::zero()).unwrap_or(0)
    }

    /// Same mixture with one more (zero-probability) entry.
    pub fn extended(&self, extra: usize) -> Self {
        let mut probs = self.probs.clone();
        probs.extend(std::iter::repeat_n(T::zero(), extra));
        Self { probs }
    }
}

pub(crate) fn check_matrix<T: Scalar>(a: &[Vec<T>]) -> Result<(usize, usize), MetagameError> {
    let cols = a.first().map(Vec::len).unwrap_or(0);
    if cols == 0 || a.iter().any(|r| r.len() != cols) || a.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MetagameError::BadMatrix);
    }
    Ok((a.len(), cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_strategy_validation() {
        assert!(MixedStrategy::new(vec![0.5, 0.5]).is_ok());
        assert!(MixedStrategy::new(vec![0.5, 0.6]).is_err());
        assert!(MixedStrategy::new(vec![-0.1, 1.1]).is_err());
        assert!(MixedStrategy::<f64>::new(vec![]).is_err());
        assert!(MixedStrategy::new(vec![1.0f32 / 3.0; 3]).is_ok());
    }

    #[test]
    fn weights_normalise_with_uniform_fallback() {
        let m = MixedStrategy::from_weights(&[1.0, 3.0]).unwrap();
        assert_eq!(m.probs(), &[0.25, 0.75]);
        let u = MixedStrategy::from_weights(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(u.probs(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn sampling_respects_support() {
        let m = MixedStrategy::new(vec![0.0, 1.0, 0.0]).unwrap();
        for u in [0.0, 0.3, 0.999_999] {
            assert_eq!(m.sample_with(u), 1);
        }
        let m = MixedStrategy::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(m.sample_with(0.2), 0);
        assert_eq!(m.sample_with(0.7), 1);
    }
}
