use serde::{Deserialize, Serialize};

use super::{MetagameError, MixedStrategy};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PfspWeighting {
    /// `(1 - winrate)^2`: focus on opponents the learner struggles with.
    #[default]
    Hard,
    /// Uniform over opponents not yet beaten every time.
    Even,
}

/// Opponent distribution from the learner's win rates against each member.
/// An all-zero weight vector falls back to uniform.
pub fn pfsp_distribution<T: Scalar>(
    win_rates: &[T],
    weighting: PfspWeighting,
) -> Result<MixedStrategy<T>, MetagameError> {
    if win_rates.iter().any(|w| !w.is_finite() || *w < T::zero() || *w > T::one()) {
        return Err(MetagameError::NotAProbability(format!("win rates {win_rates:?}")));
    }
    let weights: Vec<T> = win_rates
        .iter()
        .map(|&x| match weighting {
            PfspWeighting::Hard => (T::one() - x) * (T::one() - x),
            PfspWeighting::Even => {
                if x < T::one() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        })
        .collect();
    MixedStrategy::from_weights(&weights)
}
