//! Privacy budget, softmax temperature, and the closed-form regret bounds.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Largest inverse temperature the selector ever uses.
pub const ETA_CAP: f64 = 0.125;

/// Privacy budget `epsilon` together with the softmax inverse temperature
/// `eta = min(epsilon / 2, 1/8)` derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub eta: f64,
}

impl PrivacyParams {
    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        eta_from_epsilon(epsilon)
    }
}

pub fn eta_from_epsilon(epsilon: f64) -> Result<PrivacyParams> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return invalid(format!("epsilon must be positive and finite, got {epsilon}"));
    }
    Ok(PrivacyParams {
        epsilon,
        eta: (epsilon / 2.0).min(ETA_CAP),
    })
}

/// The two forms of the explicit regret bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBound {
    /// `1 + 800 ln K / delta_min + 16 ln K / eta`
    pub tight: f64,
    /// `1000 (ln K / delta_min + ln K / epsilon)`
    pub relaxed: f64,
}

pub(crate) fn check_bound_domain(k: usize, delta_min: f64) -> Result<()> {
    if k < 2 {
        return invalid(format!("K must be at least 2, got {k}"));
    }
    if !(delta_min > 0.0 && delta_min <= 1.0) {
        return invalid(format!("delta_min must lie in (0, 1], got {delta_min}"));
    }
    Ok(())
}

/// Regret bound for `K` actions, minimum gap `delta_min` and privacy budget
/// `epsilon`. Natural logarithm throughout.
pub fn theorem_bound(k: usize, delta_min: f64, epsilon: f64) -> Result<TheoremBound> {
    check_bound_domain(k, delta_min)?;
    let params = eta_from_epsilon(epsilon)?;
    let ln_k = (k as f64).ln();
    let statistical = ln_k / delta_min;
    let privacy = ln_k / params.eta;
    Ok(TheoremBound {
        tight: 1.0 + 800.0 * statistical + 16.0 * privacy,
        relaxed: 1000.0 * (statistical + ln_k / epsilon),
    })
}
