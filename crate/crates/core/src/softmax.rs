//! Exponential-weights selection.

use rand::Rng;

use crate::error::{invalid, Result};

/// Tolerance on the total mass accepted by [`sample_categorical`].
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Softmax of `-eta * losses`.
///
/// Scores are shifted by their maximum before exponentiation, so the largest
/// weight is exactly one and nothing overflows. Very large losses underflow
/// to zero probability rather than producing NaN.
pub fn softmax_weights(losses: &[f64], eta: f64) -> Result<Vec<f64>> {
    if losses.is_empty() {
        return invalid("softmax needs at least one score");
    }
    if !eta.is_finite() || eta <= 0.0 {
        return invalid(format!("eta must be positive and finite, got {eta}"));
    }
    if let Some(bad) = losses.iter().find(|x| !x.is_finite()) {
        return invalid(format!("softmax scores must be finite, got {bad}"));
    }
    let min_loss = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = losses
        .iter()
        .map(|&l| (-eta * (l - min_loss)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Validates that `p` is a probability vector within [`MASS_TOLERANCE`].
pub fn check_probability_vector(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return invalid("empty probability vector");
    }
    if let Some((i, &v)) = p.iter().enumerate().find(|(_, v)| **v < 0.0 || !v.is_finite()) {
        return invalid(format!("probability {i} is {v}"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return invalid(format!("probabilities sum to {total}"));
    }
    Ok(())
}

/// Draws an index with probability `p[j]` by inverting the cumulative sums of
/// `p` at one uniform draw. The last index with positive mass absorbs any
/// rounding residual.
pub fn sample_categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> Result<usize> {
    check_probability_vector(p)?;
    Ok(sample_unchecked(p, rng.random::<f64>()))
}

pub(crate) fn sample_unchecked(p: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (j, &pj) in p.iter().enumerate() {
        if pj > 0.0 {
            cumulative += pj;
            last_positive = j;
            if u < cumulative {
                return j;
            }
        }
    }
    last_positive
}
