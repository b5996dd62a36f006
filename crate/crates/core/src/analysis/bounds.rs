use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fm::{fm_exact, softmax_error, EXACT_ENUMERATION_LIMIT};
use super::hoeffding_halfwidth;
use crate::env::Environment;
use crate::episode::run_episode;
use crate::error::{invalid, Result};
use crate::gaps::GapProfile;
use crate::params::{check_bound_domain, eta_from_epsilon, theorem_bound};
use crate::policy::RpSoftmax;
use crate::seed::{rng_for, ENVIRONMENT_STREAM};
use crate::sum::CompensatedSum;

/// Seed stream of the policy in the bound checks.
const POLICY_STREAM: u64 = 1;

/// `200 ln K / delta_min + 4 ln K / eta`, the bound on `sum_m F_m`.
pub fn master_bound_value(k: usize, delta_min: f64, eta: f64) -> Result<f64> {
    check_bound_domain(k, delta_min)?;
    if !eta.is_finite() || eta <= 0.0 {
        return invalid(format!("eta must be positive, got {eta}"));
    }
    let ln_k = (k as f64).ln();
    Ok(200.0 * (ln_k / delta_min) + 4.0 * (ln_k / eta))
}

/// `exp(-m mu^2 / 8)`, the bound on `P(sum of m [-1,1]-valued variables with
/// mean mu <= m mu / 2)`.
pub fn hoeffding_bound(m: u64, mu: f64) -> Result<f64> {
    if m == 0 {
        return invalid("m must be at least 1");
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return invalid(format!("mu must lie in (0, 1], got {mu}"));
    }
    Ok((-(m as f64) * mu * mu / 8.0).exp())
}

/// Empirical frequency of `sum_{s<=m} (X_{s,other} - X_{s,best}) <= m mu / 2`
/// where `mu` is the exact mean gap between the two coordinates.
pub fn lower_tail_frequency<R: Rng + ?Sized>(
    env: &Environment,
    best: usize,
    other: usize,
    m: u64,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let k = env.k();
    if best >= k || other >= k || best == other {
        return invalid(format!("actions {best}, {other} invalid for K = {k}"));
    }
    if trials == 0 {
        return invalid("need at least one trial");
    }
    let mu = env.means()[other] - env.means()[best];
    let threshold = m as f64 * mu / 2.0;
    let mut row = Vec::with_capacity(k);
    let mut hits = 0usize;
    for _ in 0..trials {
        let mut d = 0.0;
        for _ in 0..m {
            env.sample_into(rng, &mut row);
            d += row[other] - row[best];
        }
        hits += usize::from(d <= threshold);
    }
    Ok(hits as f64 / trials as f64)
}

/// Truncation policy for `sum_{m >= 1} F_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions {
    /// Always sum at least this many terms.
    pub min_len: u64,
    /// Stop once a term falls below this value.
    pub stop_below: f64,
    /// Hard cap on the number of terms.
    pub max_len: u64,
    /// Sample paths used for terms too large to enumerate.
    pub mc_paths: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            min_len: 1,
            stop_below: 1e-6,
            max_len: 1 << 16,
            mc_paths: 20_000,
        }
    }
}

/// Truncated `F_1, ..., F_M` with the tail allowance for `m > M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmSeries {
    /// `values[i]` estimates `F_{i+1}`.
    pub values: Vec<f64>,
    /// Leading terms computed by exact enumeration.
    pub exact_terms: u64,
    pub mc_paths: usize,
    pub truncation: u64,
    /// `F_M * 2 / (eta * delta_min)`.
    pub tail_allowance: f64,
    /// False when `max_len` was reached before a term fell below
    /// `stop_below`.
    pub converged: bool,
}

impl FmSeries {
    pub fn partial_sum(&self) -> f64 {
        self.values.iter().copied().collect::<CompensatedSum>().value()
    }

    pub fn total(&self) -> f64 {
        self.partial_sum() + self.tail_allowance
    }
}

/// Computes `F_m` for `m = 1, 2, ...` exactly while the outcome space is
/// small enough, then by Monte Carlo along shared sample paths (each path
/// gives an unbiased sample of every `F_m` at once).
pub fn fm_series<R: Rng + ?Sized>(
    env: &Environment,
    eta: f64,
    gaps: &GapProfile,
    options: SeriesOptions,
    rng: &mut R,
) -> Result<FmSeries> {
    if options.max_len == 0 || options.max_len < options.min_len {
        return invalid("series length cap must be positive and at least min_len");
    }
    if options.mc_paths == 0 {
        return invalid("need at least one sample path");
    }
    let support = env.to_finite_support().ok();
    let k = env.k();
    let mut values = Vec::new();
    let mut exact_terms = 0;
    let mut paths: Option<Vec<Vec<f64>>> = None;
    let mut row = Vec::with_capacity(k);
    let mut converged = false;
    for m in 1..=options.max_len {
        let exact = support
            .as_ref()
            .is_some_and(|s| paths.is_none() && s.sequence_count(m as u32) <= EXACT_ENUMERATION_LIMIT);
        let value = if exact {
            exact_terms += 1;
            fm_exact(env, m, eta, gaps)?.value
        } else {
            let sums = paths.get_or_insert_with(|| {
                (0..options.mc_paths)
                    .map(|_| {
                        let mut s = vec![0.0; k];
                        for _ in 1..m {
                            env.sample_into(rng, &mut row);
                            s.iter_mut().zip(&row).for_each(|(a, x)| *a += x);
                        }
                        s
                    })
                    .collect()
            });
            let mut total = CompensatedSum::new();
            for s in sums.iter_mut() {
                env.sample_into(rng, &mut row);
                s.iter_mut().zip(&row).for_each(|(a, x)| *a += x);
                total.add(softmax_error(s, eta, gaps));
            }
            total.value() / options.mc_paths as f64
        };
        values.push(value);
        if m >= options.min_len && value < options.stop_below {
            converged = true;
            break;
        }
    }
    let last = *values.last().expect("at least one term");
    Ok(FmSeries {
        truncation: values.len() as u64,
        values,
        exact_terms,
        mc_paths: options.mc_paths,
        tail_allowance: last * 2.0 / (eta * gaps.delta_min),
        converged,
    })
}

/// Empirical mean (with a 99% Hoeffding interval) compared to a closed-form
/// or estimated right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub horizon: u64,
    pub trials: usize,
    pub lhs: f64,
    pub lhs_ci_halfwidth: f64,
    pub lhs_upper: f64,
    pub rhs: f64,
    /// `rhs - lhs_upper`.
    pub slack_used: f64,
    /// Terms summed on the right-hand side, zero for closed forms.
    pub truncation: u64,
    pub tail_allowance: f64,
    pub pass: bool,
}

/// Final pseudoregret of the randomized-prefix softmax policy over
/// independent trials, returned in trial order.
fn rp_softmax_regrets(
    env: &Environment,
    epsilon: f64,
    horizon: u64,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut policy = RpSoftmax::uniform(env.k(), epsilon, rng_for(master_seed, POLICY_STREAM, i))?;
            let mut data = rng_for(master_seed, ENVIRONMENT_STREAM, i);
            Ok(run_episode(&mut policy, env, horizon, &mut data, &[horizon], false)?.final_regret())
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn check_against(
    env: &Environment,
    epsilon: f64,
    horizon: u64,
    trials: usize,
    master_seed: u64,
    rhs: f64,
    truncation: u64,
    tail_allowance: f64,
) -> Result<BoundCheck> {
    if trials == 0 {
        return invalid("need at least one trial");
    }
    let gaps = env.gap_profile()?;
    let regrets = rp_softmax_regrets(env, epsilon, horizon, trials, master_seed)?;
    let lhs = regrets.iter().copied().collect::<CompensatedSum>().value() / trials as f64;
    let lhs_ci_halfwidth = hoeffding_halfwidth(horizon as f64 * gaps.max_gap(), trials);
    let lhs_upper = lhs + lhs_ci_halfwidth;
    Ok(BoundCheck {
        horizon,
        trials,
        lhs,
        lhs_ci_halfwidth,
        lhs_upper,
        rhs,
        slack_used: rhs - lhs_upper,
        truncation,
        tail_allowance,
        pass: lhs_upper <= rhs,
    })
}

/// Mean pseudoregret at `horizon` against `1 + 4 sum_m F_m`.
pub fn clock_bound_check(
    env: &Environment,
    epsilon: f64,
    horizon: u64,
    trials: usize,
    master_seed: u64,
    options: SeriesOptions,
) -> Result<BoundCheck> {
    let params = eta_from_epsilon(epsilon)?;
    let gaps = env.gap_profile()?;
    let options = SeriesOptions {
        min_len: options.min_len.max(horizon),
        max_len: options.max_len.max(horizon),
        ..options
    };
    // Separate stream so the series never shares draws with the episodes.
    let mut rng = rng_for(master_seed, u64::MAX, 0);
    let series = fm_series(env, params.eta, &gaps, options, &mut rng)?;
    let rhs = 1.0 + 4.0 * series.total();
    check_against(
        env,
        epsilon,
        horizon,
        trials,
        master_seed,
        rhs,
        series.truncation,
        series.tail_allowance,
    )
}

/// Mean pseudoregret at `horizon` against the tight closed-form bound.
pub fn regret_bound_check(
    env: &Environment,
    epsilon: f64,
    horizon: u64,
    trials: usize,
    master_seed: u64,
) -> Result<BoundCheck> {
    let gaps = env.gap_profile()?;
    let rhs = theorem_bound(env.k(), gaps.delta_min, epsilon)?.tight;
    check_against(env, epsilon, horizon, trials, master_seed, rhs, 0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::LossVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn master_value_examples() {
        let ln2 = 2f64.ln();
        let v = master_bound_value(2, 1.0, 0.125).unwrap();
        assert!((v - 232.0 * ln2).abs() < 1e-12);
        assert!((v - 160.81).abs() < 0.01);

        let (d, e) = (0.3, 0.05);
        let step = master_bound_value(8, d, e).unwrap() - master_bound_value(4, d, e).unwrap();
        assert!((step - (200.0 / d + 4.0 / e) * ln2).abs() < 1e-9);

        assert!(master_bound_value(4, 0.5, 0.1).unwrap() > master_bound_value(4, 0.6, 0.1).unwrap());
        assert!(master_bound_value(4, 0.5, 0.1).unwrap() > master_bound_value(4, 0.5, 0.12).unwrap());
        assert!(master_bound_value(4, 0.5, 0.0).is_err());
    }

    #[test]
    fn theorem_matches_master() {
        for (k, d, eps) in [(2, 1.0, 2.0), (7, 0.013, 0.05), (1000, 0.5, 0.25)] {
            let eta = eta_from_epsilon(eps).unwrap().eta;
            assert_eq!(
                1.0 + 4.0 * master_bound_value(k, d, eta).unwrap(),
                theorem_bound(k, d, eps).unwrap().tight
            );
        }
    }

    #[test]
    fn hoeffding_examples() {
        assert!((hoeffding_bound(8, 1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(hoeffding_bound(9, 1.0).unwrap() < hoeffding_bound(8, 1.0).unwrap());
        assert!(hoeffding_bound(8, 0.9).unwrap() > hoeffding_bound(8, 1.0).unwrap());
        assert!(hoeffding_bound(0, 0.5).is_err());
        assert!(hoeffding_bound(3, 0.0).is_err());
    }

    #[test]
    fn series_for_deterministic_env_is_exact() {
        let env = Environment::deterministic(LossVector::new(vec![0.0, 1.0]).unwrap()).unwrap();
        let gaps = env.gap_profile().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = fm_series(&env, 0.125, &gaps, SeriesOptions::default(), &mut rng).unwrap();
        assert!(s.converged);
        assert_eq!(s.exact_terms, s.truncation);
        let closed: f64 = (1..=s.truncation)
            .map(|m| {
                let q = (-0.125 * m as f64).exp();
                q / (1.0 + q)
            })
            .sum();
        assert!((s.partial_sum() - closed).abs() < 1e-12);
        assert!(s.tail_allowance < 1e-6 * 16.0 + 1e-12);
    }

    #[test]
    fn one_round_clock_check() {
        let env = Environment::bernoulli(vec![0.2, 0.8]).unwrap();
        let c = clock_bound_check(&env, 1.0, 1, 200, 3, SeriesOptions::default()).unwrap();
        assert!(c.lhs <= 1.0);
        assert!(c.rhs >= 1.0);
        assert!(c.pass);
    }
}
