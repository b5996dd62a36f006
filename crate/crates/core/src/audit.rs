//! Exact privacy auditing on small deterministic datasets.
//!
//! For a fixed input prefix the law of the block actions `(A_0, ..., A_s)`
//! factorizes into the initial law times one selection law per completed
//! block. Both laws of a neighboring pair are computed exactly and compared
//! outcome by outcome; for discrete laws the pointwise ratio bounds the
//! ratio of every event.

use rayon::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::schedule::{block_end, block_of, block_start, prefix_window};
use crate::softmax::{check_probability_vector, softmax_weights};

/// Largest number of exact laws a single sweep may evaluate.
pub const MAX_EVALUATED_LAWS: f64 = 1e7;
/// Largest dense outcome space of an [`OutputLaw`].
pub const MAX_OUTCOMES: usize = 1 << 20;
/// Relative slack on the privacy bound absorbing rounding.
pub const RATIO_SLACK: f64 = 1e-9;

/// A deterministic loss prefix `x_1, ..., x_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditDataset {
    rows: Vec<Vec<f64>>,
}

impl AuditDataset {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return invalid("audit dataset needs at least one row");
        };
        let k = first.len();
        if k < 2 {
            return invalid(format!("need at least 2 actions, got {k}"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return invalid(format!("row {} has {} entries, expected {k}", i + 1, row.len()));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return invalid(format!("row {} has entry {v} outside [0, 1]", i + 1));
            }
        }
        Ok(Self { rows })
    }

    pub fn t(&self) -> u64 {
        self.rows.len() as u64
    }

    pub fn k(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Copy with round `u` (1-based) replaced.
    pub fn with_row(&self, u: u64, row: Vec<f64>) -> Result<Self> {
        if u == 0 || u > self.t() {
            return invalid(format!("round {u} outside 1..={}", self.t()));
        }
        let mut rows = self.rows.clone();
        rows[u as usize - 1] = row;
        Self::new(rows)
    }
}

/// Law of the action selected after block `r` from the block's rows:
/// the average over the prefix window of the softmax of the prefix sums.
pub fn exact_block_law(block_rows: &[Vec<f64>], r: u32, eta: f64) -> Result<Vec<f64>> {
    let len = block_start(r)?;
    if block_rows.len() as u64 != len {
        return invalid(format!(
            "block {r} has {len} rows, got {}",
            block_rows.len()
        ));
    }
    let k = block_rows[0].len();
    let window = prefix_window(r)?;
    let weight = 1.0 / (window.end() - window.start() + 1) as f64;
    let mut sums = vec![0.0; k];
    let mut law = vec![0.0; k];
    for (s, row) in block_rows.iter().enumerate() {
        if row.len() != k {
            return invalid("block rows have different lengths");
        }
        for (acc, x) in sums.iter_mut().zip(row) {
            *acc += x;
        }
        if window.contains(&(s as u64 + 1)) {
            for (l, p) in law.iter_mut().zip(softmax_weights(&sums, eta)?) {
                *l += weight * p;
            }
        }
    }
    Ok(law)
}

/// Exact law of `(A_0, ..., A_s)` with `s = block_of(t)`, stored densely.
/// Outcome tuples are encoded in base `K` with `a_0` as the most
/// significant digit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputLaw {
    pub k: usize,
    pub s: u32,
    pub probabilities: Vec<f64>,
}

impl OutputLaw {
    pub fn prob(&self, outcome: &[usize]) -> f64 {
        self.probabilities[self.index_of(outcome)]
    }

    pub fn index_of(&self, outcome: &[usize]) -> usize {
        outcome.iter().fold(0, |acc, &a| acc * self.k + a)
    }

    pub fn outcome(&self, index: usize) -> Vec<usize> {
        decode_outcome(index, self.k, self.s)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

fn decode_outcome(mut index: usize, k: usize, s: u32) -> Vec<usize> {
    let mut tuple = vec![0; s as usize + 1];
    for slot in tuple.iter_mut().rev() {
        *slot = index % k;
        index /= k;
    }
    tuple
}

fn outcome_count(k: usize, s: u32) -> Result<usize> {
    let count = (k as f64).powi(s as i32 + 1);
    if count > MAX_OUTCOMES as f64 {
        return Err(Error::BudgetExceeded {
            what: "output law outcomes",
            estimate: count,
            limit: MAX_OUTCOMES as f64,
        });
    }
    Ok(count as usize)
}

/// Exact output law on a deterministic prefix. Only the blocks before the
/// current block `s` contribute selection factors; rows of `B_s` are unused.
pub fn exact_output_law(dataset: &AuditDataset, eta: f64, initial_law: &[f64]) -> Result<OutputLaw> {
    let k = dataset.k();
    if initial_law.len() != k {
        return invalid(format!("initial law has {} entries, expected {k}", initial_law.len()));
    }
    check_probability_vector(initial_law)?;
    let s = block_of(dataset.t())?;
    outcome_count(k, s)?;
    let mut probabilities = initial_law.to_vec();
    for r in 0..s {
        let start = block_start(r)? as usize - 1;
        let end = block_end(r)? as usize;
        let factor = exact_block_law(&dataset.rows()[start..end], r, eta)?;
        probabilities = probabilities
            .iter()
            .flat_map(|&p| factor.iter().map(move |&f| p * f))
            .collect();
    }
    Ok(OutputLaw { k, s, probabilities })
}

/// Largest pointwise ratio and the outcome attaining it (first on ties).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseRatio {
    pub ratio: f64,
    pub outcome: usize,
}

/// `max_a p(a) / q(a)` with `0/0 = 1` and `x/0 = inf` for `x > 0`.
pub fn pointwise_ratio(p: &[f64], q: &[f64]) -> Result<PointwiseRatio> {
    if p.len() != q.len() {
        return invalid(format!(
            "outcome spaces differ: {} vs {} outcomes",
            p.len(),
            q.len()
        ));
    }
    let mut best = PointwiseRatio {
        ratio: f64::NEG_INFINITY,
        outcome: 0,
    };
    for (a, (&x, &y)) in p.iter().zip(q).enumerate() {
        let ratio = match (x > 0.0, y > 0.0) {
            (false, _) => 1.0,
            (true, false) => f64::INFINITY,
            (true, true) => x / y,
        };
        if ratio > best.ratio {
            best = PointwiseRatio { ratio, outcome: a };
        }
    }
    Ok(best)
}

/// Symmetric version: the neighbor relation is symmetric, so both
/// directions are checked.
fn two_sided_ratio(p: &[f64], q: &[f64]) -> Result<(PointwiseRatio, bool)> {
    let forward = pointwise_ratio(p, q)?;
    let backward = pointwise_ratio(q, p)?;
    Ok(if backward.ratio > forward.ratio {
        (backward, true)
    } else {
        (forward, false)
    })
}

/// Which base datasets an [`audit_sweep`] visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseDatasets {
    /// Every dataset with entries from the grid.
    Exhaustive,
    /// This many datasets drawn uniformly from the grid.
    Sampled(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub k: usize,
    pub t: u64,
    pub eta: f64,
    pub grid: Vec<f64>,
    pub base: BaseDatasets,
}

/// Neighbor pair and outcome attaining the reported maximum ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub dataset: Vec<Vec<f64>>,
    /// 1-based round that was replaced.
    pub position: u64,
    pub replacement: Vec<f64>,
    /// `(a_0, ..., a_s)`.
    pub outcome: Vec<usize>,
    /// True when the maximum is `law(neighbor) / law(dataset)`.
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub k: usize,
    pub t: u64,
    pub eta: f64,
    pub grid: Vec<f64>,
    pub dataset_count: usize,
    pub neighbor_pairs: u64,
    pub max_ratio: f64,
    /// Largest ratio over neighbors differing inside the current block.
    pub current_block_max_ratio: Option<f64>,
    /// `exp(2 eta)`.
    pub bound: f64,
    pub witness: Option<Witness>,
    pub pass: bool,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return invalid("grid must not be empty");
    }
    if let Some(v) = grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return invalid(format!("grid value {v} outside [0, 1]"));
    }
    Ok(())
}

fn grid_point(grid: &[f64], mut index: usize, k: usize) -> Vec<f64> {
    let mut row = vec![0.0; k];
    for slot in row.iter_mut().rev() {
        *slot = grid[index % grid.len()];
        index /= grid.len();
    }
    row
}

/// Number of exact laws a sweep evaluates.
pub fn sweep_cost(config: &AuditConfig) -> f64 {
    let rows = (config.grid.len() as f64).powi(config.k as i32);
    let datasets = match config.base {
        BaseDatasets::Exhaustive => rows.powf(config.t as f64),
        BaseDatasets::Sampled(n) => n as f64,
    };
    datasets * (1.0 + config.t as f64 * rows)
}

#[derive(Debug, Clone)]
struct Best {
    ratio: f64,
    key: (usize, u64, usize, usize),
    reversed: bool,
}

impl Best {
    fn better(self, other: Self) -> Self {
        if other.ratio > self.ratio || (other.ratio == self.ratio && other.key < self.key) {
            other
        } else {
            self
        }
    }
}

/// Exact neighbor sweep against the `exp(2 eta)` bound.
///
/// For each base dataset, every round is replaced by every row of
/// `grid^K`; both output laws are computed exactly and the two-sided
/// pointwise ratio is recorded. The maximum and the reduction order are
/// independent of the thread count.
pub fn audit_sweep<R: Rng + ?Sized>(config: &AuditConfig, rng: &mut R) -> Result<AuditReport> {
    let AuditConfig { k, t, eta, ref grid, base } = *config;
    if k < 2 {
        return invalid(format!("need at least 2 actions, got {k}"));
    }
    if t == 0 {
        return invalid("t must be at least 1");
    }
    if !eta.is_finite() || eta <= 0.0 {
        return invalid(format!("eta must be positive, got {eta}"));
    }
    check_grid(grid)?;
    let cost = sweep_cost(config);
    if cost > MAX_EVALUATED_LAWS {
        return Err(Error::BudgetExceeded {
            what: "privacy audit",
            estimate: cost,
            limit: MAX_EVALUATED_LAWS,
        });
    }
    outcome_count(k, block_of(t)?)?;

    let row_count = grid.len().pow(k as u32);
    let cells = k * t as usize;
    let datasets: Vec<Vec<usize>> = match base {
        BaseDatasets::Exhaustive => {
            let total = (row_count as u64).pow(t as u32) as usize;
            (0..total)
                .map(|mut d| {
                    (0..t)
                        .map(|_| {
                            let row = d % row_count;
                            d /= row_count;
                            row
                        })
                        .collect()
                })
                .collect()
        }
        BaseDatasets::Sampled(n) => (0..n)
            .map(|_| (0..t).map(|_| rng.random_range(0..row_count)).collect())
            .collect(),
    };
    debug_assert!(datasets.iter().all(|d| d.len() * k == cells));

    let initial = vec![1.0 / k as f64; k];
    let current_start = block_start(block_of(t)?)?;
    let build = |rows: &[usize]| {
        AuditDataset::new(rows.iter().map(|&i| grid_point(grid, i, k)).collect())
    };

    let results: Vec<(Best, f64)> = datasets
        .par_iter()
        .enumerate()
        .map(|(d, rows)| -> Result<(Best, f64)> {
            let dataset = build(rows)?;
            let law = exact_output_law(&dataset, eta, &initial)?;
            let mut best = Best {
                ratio: 1.0,
                key: (usize::MAX, u64::MAX, usize::MAX, usize::MAX),
                reversed: false,
            };
            let mut current_block = 1.0f64;
            for u in 1..=t {
                for replacement in 0..row_count {
                    let mut neighbor_rows = rows.clone();
                    neighbor_rows[u as usize - 1] = replacement;
                    let neighbor = build(&neighbor_rows)?;
                    let other = exact_output_law(&neighbor, eta, &initial)?;
                    let (ratio, reversed) = two_sided_ratio(&law.probabilities, &other.probabilities)?;
                    if u >= current_start {
                        current_block = current_block.max(ratio.ratio);
                    }
                    best = best.better(Best {
                        ratio: ratio.ratio,
                        key: (d, u, replacement, ratio.outcome),
                        reversed,
                    });
                }
            }
            Ok((best, current_block))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<Best> = None;
    let mut current_block_max: Option<f64> = None;
    for (b, c) in results {
        best = Some(match best {
            None => b,
            Some(prev) => prev.better(b),
        });
        current_block_max = Some(current_block_max.map_or(c, |m: f64| m.max(c)));
    }
    let best = best.expect("at least one dataset");
    let bound = (2.0 * eta).exp();
    let witness = (best.key.0 != usize::MAX).then(|| {
        let (d, u, replacement, outcome) = best.key;
        let s = block_of(t).expect("t >= 1");
        Witness {
            dataset: datasets[d].iter().map(|&i| grid_point(grid, i, k)).collect(),
            position: u,
            replacement: grid_point(grid, replacement, k),
            outcome: decode_outcome(outcome, k, s),
            reversed: best.reversed,
        }
    });
    Ok(AuditReport {
        k,
        t,
        eta,
        grid: grid.clone(),
        dataset_count: datasets.len(),
        neighbor_pairs: datasets.len() as u64 * t * row_count as u64,
        max_ratio: best.ratio,
        current_block_max_ratio: current_block_max,
        bound,
        witness,
        pass: best.ratio <= bound * (1.0 + RATIO_SLACK),
    })
}

/// Result of [`prefix_mechanism_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismReport {
    pub k: usize,
    pub m: u64,
    pub eta: f64,
    pub grid: Vec<f64>,
    pub pairs: u64,
    pub max_ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Single-prefix softmax selection at a fixed prefix length `m`, before any
/// averaging over prefix lengths.
///
/// The law depends on the data only through the prefix sums. A one-row
/// neighbor pair has sums `R + x` and `R + y`, where `R` is the sum of the
/// other `m - 1` rows and `x`, `y` are the original and replacement rows,
/// so enumerating every reachable `R` and every `x`, `y` in `grid^K` covers
/// every neighbor pair of `m`-row grid datasets.
pub fn prefix_mechanism_sweep(k: usize, m: u64, eta: f64, grid: &[f64]) -> Result<MechanismReport> {
    if k < 2 {
        return invalid(format!("need at least 2 actions, got {k}"));
    }
    if m == 0 {
        return invalid("prefix length must be at least 1");
    }
    check_grid(grid)?;

    // Reachable per-coordinate sums of m - 1 grid values.
    let mut coord_sums = vec![0.0];
    for _ in 1..m {
        let mut next: Vec<f64> = coord_sums
            .iter()
            .flat_map(|s| grid.iter().map(move |g| s + g))
            .collect();
        next.sort_by(|a, b| a.total_cmp(b));
        next.dedup();
        coord_sums = next;
    }
    let row_count = grid.len().pow(k as u32);
    let rest_count = coord_sums.len().pow(k as u32);
    let cost = rest_count as f64 * (row_count as f64).powi(2);
    if cost > MAX_EVALUATED_LAWS * 10.0 {
        return Err(Error::BudgetExceeded {
            what: "prefix mechanism sweep",
            estimate: cost,
            limit: MAX_EVALUATED_LAWS * 10.0,
        });
    }
    let rows: Vec<Vec<f64>> = (0..row_count).map(|i| grid_point(grid, i, k)).collect();

    let max_ratio = (0..rest_count)
        .into_par_iter()
        .map(|idx| -> Result<f64> {
            let rest = grid_point(&coord_sums, idx, k);
            let laws: Vec<Vec<f64>> = rows
                .iter()
                .map(|x| {
                    let sums: Vec<f64> = rest.iter().zip(x).map(|(r, x)| r + x).collect();
                    softmax_weights(&sums, eta)
                })
                .collect::<Result<_>>()?;
            let mut max = 1.0f64;
            for p in &laws {
                for q in &laws {
                    max = max.max(pointwise_ratio(p, q)?.ratio);
                }
            }
            Ok(max)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(1.0, f64::max);

    let bound = (2.0 * eta).exp();
    Ok(MechanismReport {
        k,
        m,
        eta,
        grid: grid.to_vec(),
        pairs: rest_count as u64 * (row_count as u64).pow(2),
        max_ratio,
        bound,
        pass: max_ratio <= bound * (1.0 + RATIO_SLACK),
    })
}
