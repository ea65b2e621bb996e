//! Shared duration sampling helpers.

use rand::Rng;
use rand_distr::{Distribution, Exp};

/// Exponential draw with the given mean. A mean of zero is the point mass
/// at zero, which the dissemination schedule relies on for zero-quality
/// opinions.
pub(crate) fn sample_exp(rng: &mut impl Rng, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Exp::new(1.0 / mean).expect("positive rate").sample(rng)
}
