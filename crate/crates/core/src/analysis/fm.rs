use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hoeffding_halfwidth;
use crate::env::Environment;
use crate::error::{invalid, Result};
use crate::gaps::GapProfile;
use crate::softmax::softmax_weights;
use crate::sum::CompensatedSum;

/// Largest number of outcome sequences [`fm_exact`] will enumerate.
pub const EXACT_ENUMERATION_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FmMethod {
    Exact,
    MonteCarlo,
}

impl FmMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FmMethod::Exact => "exact",
            FmMethod::MonteCarlo => "monte_carlo",
        }
    }
}

/// Expected gap-weighted softmax mass after `m` i.i.d. rounds,
/// `F_m = E[sum_j gap_j * softmax_j(-eta * L_m)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmEstimate {
    pub m: u64,
    pub value: f64,
    pub method: FmMethod,
    /// Zero for exact values.
    pub ci_halfwidth: f64,
    /// Enumerated sequences or Monte Carlo samples.
    pub samples: u64,
}

pub(crate) fn softmax_error(sums: &[f64], eta: f64, gaps: &GapProfile) -> f64 {
    let p = softmax_weights(sums, eta).expect("finite sums");
    p.iter().zip(&gaps.gaps).map(|(p, g)| p * g).sum()
}

fn check_inputs(env: &Environment, m: u64, eta: f64, gaps: &GapProfile) -> Result<()> {
    if m == 0 {
        return invalid("prefix length m must be at least 1");
    }
    if !eta.is_finite() || eta <= 0.0 {
        return invalid(format!("eta must be positive, got {eta}"));
    }
    if gaps.k != env.k() {
        return invalid(format!("gap profile has {} actions, environment has {}", gaps.k, env.k()));
    }
    Ok(())
}

/// Exact `F_m` by enumerating every length-`m` outcome sequence of the
/// environment's finite support.
pub fn fm_exact(env: &Environment, m: u64, eta: f64, gaps: &GapProfile) -> Result<FmEstimate> {
    check_inputs(env, m, eta, gaps)?;
    let support = env.to_finite_support()?;
    let m32 = u32::try_from(m).map_err(|_| crate::Error::InvalidParameter(format!("m = {m} too large")))?;
    let mut total = CompensatedSum::new();
    let mut count = 0u64;
    support.for_each_prefix_sum(m32, EXACT_ENUMERATION_LIMIT, |p, sums| {
        total.add(p * softmax_error(sums, eta, gaps));
        count += 1;
    })?;
    Ok(FmEstimate {
        m,
        value: total.value(),
        method: FmMethod::Exact,
        ci_halfwidth: 0.0,
        samples: count,
    })
}

/// Monte Carlo `F_m` from `n_samples` independent prefixes, with a 99%
/// Hoeffding interval over the range `[0, max gap]`.
pub fn fm_monte_carlo<R: Rng + ?Sized>(
    env: &Environment,
    m: u64,
    eta: f64,
    gaps: &GapProfile,
    n_samples: usize,
    rng: &mut R,
) -> Result<FmEstimate> {
    check_inputs(env, m, eta, gaps)?;
    if n_samples < 100 {
        return invalid(format!("need at least 100 samples, got {n_samples}"));
    }
    let k = env.k();
    let mut row = Vec::with_capacity(k);
    let mut sums = vec![0.0; k];
    let mut total = CompensatedSum::new();
    for _ in 0..n_samples {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for _ in 0..m {
            env.sample_into(rng, &mut row);
            sums.iter_mut().zip(&row).for_each(|(s, x)| *s += x);
        }
        total.add(softmax_error(&sums, eta, gaps));
    }
    Ok(FmEstimate {
        m,
        value: total.value() / n_samples as f64,
        method: FmMethod::MonteCarlo,
        ci_halfwidth: hoeffding_halfwidth(gaps.max_gap(), n_samples),
        samples: n_samples as u64,
    })
}
