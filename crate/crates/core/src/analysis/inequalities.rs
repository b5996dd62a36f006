//! Grid checks of the elementary inequalities used in the regret analysis:
//!
//! - (i)   `1 - e^{-x} >= x / 2` on `[0, 1]`
//! - (ii)  `e^{-x} <= 1 - x / 2` on `[0, 1]`
//! - (iii) `ln(1 - u) <= -u` on `[0, 1)`
//! - (iv)  `sum_{m > n} e^{-m x} <= 2 e^{-n x} / x` for `x in (0, 1]`, `n in 0..=50`
//! - (v)   `ln(K + 1) <= 2 ln K` for `K in 2..=10^6`
//!
//! Each item reports its smallest margin (right side minus left side for
//! upper bounds); an item passes when that margin is nonnegative.

use serde::{Deserialize, Serialize};

/// Constants of the checked inequalities. Only tests change them, to confirm
/// the suite detects a false statement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConstants {
    /// Divisor `c` in item (i), `1 - e^{-x} >= x / c`.
    pub item_i_divisor: f64,
    /// Factor `c` in item (iv), `sum_{m>n} e^{-mx} <= c e^{-nx} / x`.
    pub item_iv_factor: f64,
    /// Grid points per one-dimensional item.
    pub grid_points: usize,
}

impl Default for SuiteConstants {
    fn default() -> Self {
        Self {
            item_i_divisor: 2.0,
            item_iv_factor: 2.0,
            grid_points: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub item: String,
    pub points: usize,
    pub worst_margin: f64,
    pub worst_at: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub items: Vec<ItemResult>,
    pub pass: bool,
}

struct Worst {
    margin: f64,
    at: String,
    points: usize,
}

impl Worst {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            at: String::new(),
            points: 0,
        }
    }

    fn record(&mut self, margin: f64, at: impl FnOnce() -> String) {
        self.points += 1;
        if margin < self.margin {
            self.margin = margin;
            self.at = at();
        }
    }

    fn finish(self, item: &str) -> ItemResult {
        ItemResult {
            item: item.to_string(),
            points: self.points,
            worst_margin: self.margin,
            worst_at: self.at,
            pass: self.margin >= 0.0,
        }
    }
}

/// `sum_{m > n} q^m` with `q = e^{-x}`, adding terms until the geometric
/// remainder is below `1e-15` of the running sum.
fn geometric_tail(x: f64, n: u32) -> f64 {
    let q = (-x).exp();
    let remainder_factor = q / -(-x).exp_m1();
    let mut term = (-(f64::from(n) + 1.0) * x).exp();
    let mut sum = 0.0;
    loop {
        sum += term;
        term *= q;
        if term * remainder_factor <= 1e-15 * sum || term == 0.0 {
            return sum;
        }
    }
}

pub fn inequality_suite() -> InequalityReport {
    inequality_suite_with(SuiteConstants::default())
}

pub fn inequality_suite_with(constants: SuiteConstants) -> InequalityReport {
    let n = constants.grid_points.max(2);
    let unit = |i: usize| i as f64 / (n - 1) as f64;

    let mut item_i = Worst::new();
    let mut item_ii = Worst::new();
    for i in 0..n {
        let x = unit(i);
        let one_minus = -(-x).exp_m1();
        item_i.record(one_minus - x / constants.item_i_divisor, || format!("x={x}"));
        item_ii.record(1.0 - x / 2.0 - (-x).exp(), || format!("x={x}"));
    }

    let mut item_iii = Worst::new();
    for i in 0..n {
        let u = i as f64 / n as f64;
        item_iii.record(-u - (-u).ln_1p(), || format!("u={u}"));
    }

    // 51 values of n times enough x values to reach the grid size.
    let mut item_iv = Worst::new();
    let x_points = n.div_ceil(51).max(1);
    for i in 1..=x_points {
        let x = i as f64 / x_points as f64;
        for m in 0..=50u32 {
            let lhs = geometric_tail(x, m);
            let rhs = constants.item_iv_factor * (-(f64::from(m)) * x).exp() / x;
            item_iv.record(rhs - lhs, || format!("x={x}, n={m}"));
        }
    }

    let mut item_v = Worst::new();
    for k in 2..=1_000_000u64 {
        let kf = k as f64;
        item_v.record(2.0 * kf.ln() - (kf + 1.0).ln(), || format!("K={k}"));
    }

    let items = vec![
        item_i.finish("i"),
        item_ii.finish("ii"),
        item_iii.finish("iii"),
        item_iv.finish("iv"),
        item_v.finish("v"),
    ];
    let pass = items.iter().all(|i| i.pass);
    InequalityReport { items, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_items_hold() {
        let report = inequality_suite();
        assert!(report.pass, "{report:#?}");
        assert_eq!(report.items.len(), 5);
        for item in &report.items {
            assert!(item.points >= 10_000, "{item:?}");
        }
        // Equality at the origin for items (i)-(iii).
        for item in &report.items[..3] {
            assert_eq!(item.worst_margin, 0.0, "{item:?}");
        }
    }

    #[test]
    fn geometric_tail_values() {
        let expected = 1.0 / (std::f64::consts::E - 1.0);
        assert!((geometric_tail(1.0, 0) - expected).abs() < 1e-14);
        assert!((geometric_tail(1.0, 0) - 0.58198).abs() < 1e-5);
        let x: f64 = 1e-3;
        let closed = (-(11.0) * x).exp() / -(-x).exp_m1();
        assert!(((geometric_tail(x, 10) - closed) / closed).abs() < 1e-10);
    }

    #[test]
    fn detects_false_constants() {
        // 1 - e^{-x} >= x / c fails at x = 1 once 1/c > 1 - 1/e.
        let report = inequality_suite_with(SuiteConstants {
            item_i_divisor: 1.5,
            ..SuiteConstants::default()
        });
        assert!(!report.pass);
        assert!(!report.items[0].pass);
        assert!(report.items[1..].iter().all(|i| i.pass));

        let report = inequality_suite_with(SuiteConstants {
            item_iv_factor: 0.9,
            ..SuiteConstants::default()
        });
        assert!(!report.items[3].pass);
    }
}
