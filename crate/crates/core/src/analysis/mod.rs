//! Quantities from the regret analysis, computed exactly or estimated, and
//! empirical checks of the inequalities that connect them.

mod bounds;
mod fm;
mod inequalities;
mod summary;

pub use bounds::{
    clock_bound_check, fm_series, hoeffding_bound, lower_tail_frequency, master_bound_value,
    regret_bound_check, BoundCheck, FmSeries, SeriesOptions,
};
pub use fm::{fm_exact, fm_monte_carlo, FmEstimate, FmMethod, EXACT_ENUMERATION_LIMIT};
pub use inequalities::{inequality_suite, inequality_suite_with, InequalityReport, ItemResult, SuiteConstants};
pub use summary::{regret_summary, CheckpointSummary};

/// Confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.99;

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Two-sided Hoeffding half-width at [`CONFIDENCE`] for the mean of `n`
/// i.i.d. samples with values in an interval of length `range`.
pub fn hoeffding_halfwidth(range: f64, n: usize) -> f64 {
    let delta = 1.0 - CONFIDENCE;
    range * ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfwidth_formula() {
        let h = hoeffding_halfwidth(1.0, 10_000);
        assert!((h - (200f64.ln() / 20_000.0).sqrt()).abs() < 1e-15);
        assert_eq!(hoeffding_halfwidth(0.0, 10), 0.0);
    }
}
