//! Command layer for the `dpdtol` executable. Every command is a plain
//! function returning its artifacts, so tests can call them without a
//! subprocess.

pub mod config;
pub mod error;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dpdtol::analysis::{
    fm_exact, fm_monte_carlo, hoeffding_bound, inequality_suite, master_bound_value, regret_summary,
    CheckpointSummary, FmEstimate, InequalityReport, EXACT_ENUMERATION_LIMIT,
};
use dpdtol::audit::{audit_sweep, sweep_cost, AuditConfig, AuditReport, BaseDatasets, MAX_EVALUATED_LAWS};
use dpdtol::policy::{point_mass, uniform_law};
use dpdtol::seed::{rng_for, ENVIRONMENT_STREAM};
use dpdtol::{
    eta_from_epsilon, run_episode, softmax_weights, theorem_bound, Environment, FixedAction,
    FollowTheLeader, Hedge, LaplaceRnm, Policy, RegretTrace, RpSoftmax, TheoremBound,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{AlgorithmSpec, EnvSpec, EpsilonSpec, ExperimentConfig};
pub use error::{CliError, Result};

pub const RESULTS_HEADER: &str = "algorithm,trial,t,pseudoregret";
pub const FM_HEADER: &str = "m,method,value,ci_halfwidth,samples";

/// Runs `f` on a dedicated pool; `threads == 0` lets rayon choose.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Validation(format!("threads: {e}")))?;
    Ok(pool.install(f))
}

/// Stream id of algorithm `alg_idx` under epsilon `eps_idx`. Zero is the
/// environment stream.
pub fn algorithm_id(eps_idx: usize, alg_idx: usize) -> u64 {
    ((eps_idx as u64) << 32) | (alg_idx as u64 + 1)
}

fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn build_policy(spec: &AlgorithmSpec, k: usize, epsilon: f64, rng: rand_chacha::ChaCha8Rng) -> dpdtol::Result<Box<dyn Policy>> {
    Ok(match spec {
        AlgorithmSpec::RpSoftmax { initial_law } => {
            let law = initial_law.clone().unwrap_or_else(|| uniform_law(k));
            Box::new(RpSoftmax::new(k, epsilon, rng, &law)?)
        }
        AlgorithmSpec::Ftl => Box::new(FollowTheLeader::new(k)?),
        AlgorithmSpec::Hedge { eta } => Box::new(Hedge::new(k, *eta, rng)?),
        AlgorithmSpec::LaplaceRnm => Box::new(LaplaceRnm::new(k, epsilon, rng, &uniform_law(k))?),
        AlgorithmSpec::Fixed { action } => Box::new(FixedAction::new(k, *action)?),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub checkpoints: Vec<CheckpointSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub eta: f64,
    pub theorem_bound: TheoremBound,
    pub master_bound: f64,
    pub algorithms: Vec<AlgorithmSummary>,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub results_csv: String,
    pub summary: Value,
}

/// Runs every (epsilon, algorithm, trial) episode and renders the artifacts.
/// Output does not depend on the pool size.
pub fn simulate(config: &ExperimentConfig) -> Result<SimulationOutput> {
    let mut config = config.clone();
    let env = config.resolve()?;
    let k = env.k();
    let gaps = env.gap_profile()?;
    let checkpoints = config.checkpoints.clone().expect("resolved");
    let horizon = *checkpoints.last().expect("non-empty");
    let epsilons = config.epsilon.values();
    let multi = epsilons.len() > 1;

    struct Job {
        eps_idx: usize,
        alg_idx: usize,
        trial: usize,
    }
    let mut jobs = Vec::new();
    for eps_idx in 0..epsilons.len() {
        for alg_idx in 0..config.algorithms.len() {
            for trial in 0..config.trials {
                jobs.push(Job { eps_idx, alg_idx, trial });
            }
        }
    }

    let traces: Vec<RegretTrace> = jobs
        .par_iter()
        .map(|job| -> dpdtol::Result<RegretTrace> {
            let seed = config.master_seed;
            let rng = rng_for(seed, algorithm_id(job.eps_idx, job.alg_idx), job.trial as u64);
            let mut policy = build_policy(&config.algorithms[job.alg_idx], k, epsilons[job.eps_idx], rng)?;
            let mut data = rng_for(seed, ENVIRONMENT_STREAM, job.trial as u64);
            run_episode(&mut policy, &env, horizon, &mut data, &checkpoints, false)
        })
        .collect::<dpdtol::Result<_>>()?;

    let mut csv = String::with_capacity(traces.len() * checkpoints.len() * 40);
    csv.push_str(RESULTS_HEADER);
    csv.push('\n');
    let mut per_eps = Vec::with_capacity(epsilons.len());
    let mut chunks = traces.chunks(config.trials);
    for &epsilon in &epsilons {
        let mut algorithms = Vec::with_capacity(config.algorithms.len());
        for spec in &config.algorithms {
            let chunk = chunks.next().expect("one chunk per algorithm");
            let mut label = spec.label();
            if multi {
                let _ = write!(label, "@eps={epsilon}");
            }
            for (trial, trace) in chunk.iter().enumerate() {
                for c in &trace.checkpoints {
                    let _ = writeln!(csv, "{label},{trial},{},{}", c.t, format_float(c.pseudoregret));
                }
            }
            algorithms.push(AlgorithmSummary {
                algorithm: label,
                checkpoints: regret_summary(chunk, gaps.max_gap())?,
            });
        }
        let params = eta_from_epsilon(epsilon)?;
        per_eps.push(EpsilonSummary {
            epsilon,
            eta: params.eta,
            theorem_bound: theorem_bound(k, gaps.delta_min, epsilon)?,
            master_bound: master_bound_value(k, gaps.delta_min, params.eta)?,
            algorithms,
        });
    }

    let summary = json!({
        "version": dpdtol::VERSION,
        "config": config,
        "delta_min": gaps.delta_min,
        "best_action": gaps.best_action,
        "results": per_eps,
    });
    Ok(SimulationOutput { results_csv: csv, summary })
}

/// Parameters of the `audit` command.
#[derive(Debug, Clone, Serialize)]
pub struct AuditRequest {
    pub k: usize,
    pub t: u64,
    pub epsilon: f64,
    pub grid: Vec<f64>,
    /// `None` enumerates every base dataset.
    pub datasets: Option<usize>,
    pub seed: u64,
}

pub fn audit(request: &AuditRequest) -> Result<(AuditReport, Value)> {
    let params = eta_from_epsilon(request.epsilon)?;
    let config = AuditConfig {
        k: request.k,
        t: request.t,
        eta: params.eta,
        grid: request.grid.clone(),
        base: match request.datasets {
            None => BaseDatasets::Exhaustive,
            Some(n) => BaseDatasets::Sampled(n),
        },
    };
    let cost = sweep_cost(&config);
    if cost > MAX_EVALUATED_LAWS {
        return Err(CliError::Validation(format!(
            "audit would evaluate about {cost:.3e} output laws, above the limit of {MAX_EVALUATED_LAWS:.0e}; \
             lower t or K, shrink the grid, or pass --datasets N to sample base datasets"
        )));
    }
    let mut rng = rng_for(request.seed, 0, 0);
    let report = audit_sweep(&config, &mut rng)?;
    let value = json!({
        "version": dpdtol::VERSION,
        "config": request,
        "eta": params.eta,
        "report": report,
    });
    Ok((report, value))
}

/// Parameters of the `fm` command.
#[derive(Debug, Clone, Serialize)]
pub struct FmRequest {
    pub environment: EnvSpec,
    pub m_max: u64,
    pub epsilon: f64,
    /// Monte Carlo samples per `m`; zero disables Monte Carlo rows.
    pub samples: usize,
    pub seed: u64,
}

/// Exact rows for every `m` small enough to enumerate, then Monte Carlo
/// rows when `samples > 0`.
pub fn fm_table(request: &FmRequest) -> Result<(Vec<FmEstimate>, String)> {
    let env = request.environment.build()?;
    let gaps = env.gap_profile()?;
    let eta = eta_from_epsilon(request.epsilon)?.eta;
    if request.samples > 0 && request.samples < 100 {
        return Err(CliError::Validation("samples: use 0 or at least 100".into()));
    }
    let support = env.to_finite_support().ok();
    let rows: Vec<FmEstimate> = (1..=request.m_max)
        .into_par_iter()
        .map(|m| -> dpdtol::Result<Vec<FmEstimate>> {
            let mut out = Vec::with_capacity(2);
            let feasible = support
                .as_ref()
                .is_some_and(|s| m <= u32::MAX as u64 && s.sequence_count(m as u32) <= EXACT_ENUMERATION_LIMIT);
            if feasible {
                out.push(fm_exact(&env, m, eta, &gaps)?);
            }
            if request.samples > 0 {
                let mut rng = rng_for(request.seed, m, 0);
                out.push(fm_monte_carlo(&env, m, eta, &gaps, request.samples, &mut rng)?);
            }
            Ok(out)
        })
        .collect::<dpdtol::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut csv = String::from(FM_HEADER);
    csv.push('\n');
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.m,
            r.method.as_str(),
            format_float(r.value),
            format_float(r.ci_halfwidth),
            r.samples
        );
    }
    Ok((rows, csv))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub version: &'static str,
    pub k: usize,
    pub delta_min: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub tight: f64,
    pub relaxed: f64,
    pub master_bound: f64,
}

pub fn bounds(k: usize, delta_min: f64, epsilon: f64) -> Result<BoundsReport> {
    let bound = theorem_bound(k, delta_min, epsilon)?;
    let eta = eta_from_epsilon(epsilon)?.eta;
    Ok(BoundsReport {
        version: dpdtol::VERSION,
        k,
        delta_min,
        epsilon,
        eta,
        tight: bound.tight,
        relaxed: bound.relaxed,
        master_bound: master_bound_value(k, delta_min, eta)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GridCheck {
    pub name: String,
    pub points: usize,
    pub failures: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub version: &'static str,
    pub inequalities: InequalityReport,
    pub invariants: Vec<GridCheck>,
    pub pass: bool,
}

fn grid_check(name: &str, points: impl Iterator<Item = bool>) -> GridCheck {
    let (mut n, mut failures) = (0, 0);
    for ok in points {
        n += 1;
        failures += usize::from(!ok);
    }
    GridCheck {
        name: name.into(),
        points: n,
        failures,
        pass: failures == 0,
    }
}

/// Core invariants checked on fixed grids.
pub fn invariant_grids() -> Vec<GridCheck> {
    use dpdtol::{block_end, block_of, block_start, prefix_window};

    let mut checks = Vec::new();
    checks.push(grid_check(
        "blocks partition rounds",
        (1u64..=1 << 16).map(|t| {
            let Ok(r) = block_of(t) else { return false };
            let (Ok(start), Ok(end)) = (block_start(r), block_end(r)) else { return false };
            start <= t && t <= end && (t != start || r == 0 || block_end(r - 1) == Ok(t - 1))
        }),
    ));
    checks.push(grid_check(
        "prefix window inside block",
        (0u32..=40).map(|r| match prefix_window(r) {
            Ok(w) => *w.start() >= 1 && *w.end() <= 1u64 << r && (r == 0 || *w.start() == (1 << (r - 1)) + 1),
            Err(_) => false,
        }),
    ));
    let epsilons: Vec<f64> = (0..200).map(|i| 1e-3 * 1.05f64.powi(i)).collect();
    checks.push(grid_check(
        "eta is min(eps/2, 1/8)",
        epsilons.iter().map(|&e| {
            let eta = eta_from_epsilon(e).map(|p| p.eta).unwrap_or(f64::NAN);
            eta == (e / 2.0).min(0.125) && eta <= e / 2.0
        }),
    ));
    let mut cases = Vec::new();
    for a in 0..8 {
        for b in 0..8 {
            for c in [0.01, 0.125, 1.0] {
                cases.push((vec![a as f64 * 0.7, b as f64 * 1.3, 2.0], c));
            }
        }
    }
    checks.push(grid_check(
        "softmax is a shift-invariant probability vector",
        cases.iter().map(|(l, eta)| {
            let p = softmax_weights(l, *eta).unwrap();
            let shifted: Vec<f64> = l.iter().map(|x| x + 37.5).collect();
            let q = softmax_weights(&shifted, *eta).unwrap();
            let mass: f64 = p.iter().sum();
            (mass - 1.0).abs() < 1e-12 && p.iter().zip(&q).all(|(x, y)| (x - y).abs() < 1e-12)
        }),
    ));
    let mut bound_grid = Vec::new();
    for k in [2usize, 3, 8, 100] {
        for d in [0.05, 0.2, 1.0] {
            for e in [0.01, 0.25, 1.0, 10.0] {
                bound_grid.push((k, d, e));
            }
        }
    }
    checks.push(grid_check(
        "tight bound equals 1 + 4 * master value",
        bound_grid.iter().map(|&(k, d, e)| {
            let tight = theorem_bound(k, d, e).unwrap().tight;
            let eta = eta_from_epsilon(e).unwrap().eta;
            tight == 1.0 + 4.0 * master_bound_value(k, d, eta).unwrap() && tight > 1.0
        }),
    ));
    checks.push(grid_check(
        "hoeffding bound in (0, 1]",
        (1u64..=200).flat_map(|m| [0.55, 0.6, 0.8, 1.0].map(move |mu| (m, mu))).map(|(m, mu)| {
            let b = hoeffding_bound(m, mu).unwrap();
            b > 0.0 && b <= 1.0
        }),
    ));
    checks.push(grid_check(
        "point mass and uniform laws",
        (2usize..50).map(|k| {
            let u = uniform_law(k);
            let p = point_mass(k, k - 1);
            (u.iter().sum::<f64>() - 1.0).abs() < 1e-12 && p[k - 1] == 1.0 && p.iter().sum::<f64>() == 1.0
        }),
    ));
    checks
}

pub fn selftest_with(inequalities: InequalityReport) -> SelftestReport {
    let invariants = invariant_grids();
    let pass = inequalities.pass && invariants.iter().all(|c| c.pass);
    SelftestReport {
        version: dpdtol::VERSION,
        inequalities,
        invariants,
        pass,
    }
}

pub fn selftest() -> SelftestReport {
    selftest_with(inequality_suite())
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// Builds an environment from an inline JSON spec.
pub fn parse_env(text: &str) -> Result<Environment> {
    let spec: EnvSpec = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("environment: {e}")))?;
    Ok(spec.build()?)
}
