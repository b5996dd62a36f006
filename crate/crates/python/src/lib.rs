//! Python bindings. The module is importable as `dpdtol`.

use dpdtol::analysis::{fm_exact, fm_monte_carlo, master_bound_value as master_value};
use dpdtol::policy::uniform_law;
use dpdtol::seed::{derive_seed as derive, rng_for, ENVIRONMENT_STREAM};
use dpdtol::{Environment, LossVector, Policy, RpSoftmax};
use dpdtol_cli::{AlgorithmSpec, EnvSpec, ExperimentConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand_chacha::ChaCha8Rng;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Environment", module = "dpdtol", frozen)]
struct PyEnvironment {
    inner: Environment,
}

#[pymethods]
impl PyEnvironment {
    #[staticmethod]
    fn bernoulli(means: Vec<f64>) -> PyResult<Self> {
        Environment::bernoulli(means).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn deterministic(vector: Vec<f64>) -> PyResult<Self> {
        let v = LossVector::new(vector).map_err(value_err)?;
        Environment::deterministic(v).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn correlated(means: Vec<f64>, coupling: f64) -> PyResult<Self> {
        Environment::correlated(means, coupling).map(|inner| Self { inner }).map_err(value_err)
    }

    /// Builds from the JSON environment spec used in experiment configs.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: EnvSpec = serde_json::from_str(text).map_err(value_err)?;
        spec.build().map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn means(&self) -> Vec<f64> {
        self.inner.means().to_vec()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind()
    }

    fn gap_profile<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let g = self.inner.gap_profile().map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("best_action", g.best_action)?;
        d.set_item("delta_min", g.delta_min)?;
        d.set_item("gaps", g.gaps)?;
        Ok(d)
    }

    /// `n` loss vectors from the environment stream of `seed`.
    fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rng_for(seed, ENVIRONMENT_STREAM, 0);
        (0..n).map(|_| self.inner.sample_round(&mut rng).into_inner()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Environment(kind={:?}, means={:?})", self.inner.kind(), self.inner.means())
    }
}

#[pyclass(name = "RpSoftmax", module = "dpdtol")]
struct PyRpSoftmax {
    inner: RpSoftmax<ChaCha8Rng>,
}

#[pymethods]
impl PyRpSoftmax {
    #[new]
    #[pyo3(signature = (k, epsilon, seed, initial_law = None))]
    fn new(k: usize, epsilon: f64, seed: u64, initial_law: Option<Vec<f64>>) -> PyResult<Self> {
        let law = initial_law.unwrap_or_else(|| uniform_law(k.max(1)));
        RpSoftmax::new(k, epsilon, rng_for(seed, 1, 0), &law)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn choose(&self, t: u64) -> PyResult<usize> {
        self.inner.choose(t).map_err(value_err)
    }

    fn observe(&mut self, t: u64, losses: Vec<f64>) -> PyResult<()> {
        self.inner.observe(t, &losses).map_err(value_err)
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.params().epsilon
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.params().eta
    }

    #[getter]
    fn current_block(&self) -> u32 {
        self.inner.current_block()
    }

    #[getter]
    fn prefix_len(&self) -> u64 {
        self.inner.prefix_len()
    }

    #[getter]
    fn prefix_sums(&self) -> Vec<f64> {
        self.inner.prefix_sums().to_vec()
    }

    /// Law the next block's action would be drawn from if the block ended now.
    fn selection_law(&self) -> Vec<f64> {
        self.inner.selection_law()
    }
}

#[pyfunction]
fn eta_from_epsilon(epsilon: f64) -> PyResult<f64> {
    dpdtol::eta_from_epsilon(epsilon).map(|p| p.eta).map_err(value_err)
}

/// `(tight, relaxed)`.
#[pyfunction]
fn theorem_bound(k: usize, delta_min: f64, epsilon: f64) -> PyResult<(f64, f64)> {
    dpdtol::theorem_bound(k, delta_min, epsilon)
        .map(|b| (b.tight, b.relaxed))
        .map_err(value_err)
}

#[pyfunction]
fn master_bound_value(k: usize, delta_min: f64, eta: f64) -> PyResult<f64> {
    master_value(k, delta_min, eta).map_err(value_err)
}

#[pyfunction]
fn derive_seed(master: u64, algorithm_id: u64, trial: u64) -> u64 {
    derive(master, algorithm_id, trial)
}

#[pyfunction]
fn softmax_weights(losses: Vec<f64>, eta: f64) -> PyResult<Vec<f64>> {
    dpdtol::softmax_weights(&losses, eta).map_err(value_err)
}

#[pyfunction]
fn block_of(t: u64) -> PyResult<u32> {
    dpdtol::block_of(t).map_err(value_err)
}

/// Inclusive `(low, high)` range of the prefix length of block `r`.
#[pyfunction]
fn prefix_window(r: u32) -> PyResult<(u64, u64)> {
    dpdtol::prefix_window(r).map(|w| (*w.start(), *w.end())).map_err(value_err)
}

/// Pseudoregret at each checkpoint, as `[(t, regret), ...]`. `algorithm` is
/// a kind name such as `"ftl"` or a JSON algorithm spec.
#[pyfunction]
#[pyo3(signature = (env, algorithm, epsilon, horizon, seed, trial = 0, checkpoints = None))]
#[allow(clippy::too_many_arguments)]
fn run_episode(
    py: Python<'_>,
    env: &PyEnvironment,
    algorithm: &str,
    epsilon: f64,
    horizon: u64,
    seed: u64,
    trial: u64,
    checkpoints: Option<Vec<u64>>,
) -> PyResult<Vec<(u64, f64)>> {
    let spec: AlgorithmSpec = serde_json::from_str(algorithm)
        .or_else(|_| serde_json::from_value(serde_json::json!({ "kind": algorithm })))
        .map_err(value_err)?;
    let checkpoints = checkpoints.unwrap_or_default();
    let env = &env.inner;
    py.detach(|| {
        let rng = rng_for(seed, dpdtol_cli::algorithm_id(0, 0), trial);
        let mut policy = dpdtol_cli::build_policy(&spec, env.k(), epsilon, rng)?;
        let mut data = rng_for(seed, ENVIRONMENT_STREAM, trial);
        dpdtol::run_episode(&mut policy, env, horizon, &mut data, &checkpoints, false)
    })
    .map(|trace| trace.checkpoints.iter().map(|c| (c.t, c.pseudoregret)).collect())
    .map_err(value_err)
}

/// Exact neighbor audit. Returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (k, t, epsilon, grid = vec![0.0, 1.0], datasets = None, seed = 0))]
fn audit<'py>(
    py: Python<'py>,
    k: usize,
    t: u64,
    epsilon: f64,
    grid: Vec<f64>,
    datasets: Option<usize>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let request = dpdtol_cli::AuditRequest {
        k,
        t,
        epsilon,
        grid,
        datasets,
        seed,
    };
    let (report, _) = py.detach(|| dpdtol_cli::audit(&request)).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("max_ratio", report.max_ratio)?;
    d.set_item("bound", report.bound)?;
    d.set_item("current_block_max_ratio", report.current_block_max_ratio)?;
    d.set_item("dataset_count", report.dataset_count)?;
    d.set_item("neighbor_pairs", report.neighbor_pairs)?;
    d.set_item("pass", report.pass)?;
    Ok(d)
}

/// `(value, ci_halfwidth)` of `F_m`; exact when `samples == 0`.
#[pyfunction]
#[pyo3(signature = (env, m, eta, samples = 0, seed = 0))]
fn fm(py: Python<'_>, env: &PyEnvironment, m: u64, eta: f64, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let env = &env.inner;
    py.detach(|| {
        let gaps = env.gap_profile()?;
        if samples == 0 {
            fm_exact(env, m, eta, &gaps)
        } else {
            fm_monte_carlo(env, m, eta, &gaps, samples, &mut rng_for(seed, m, 0))
        }
    })
    .map(|e| (e.value, e.ci_halfwidth))
    .map_err(value_err)
}

/// Runs an experiment config; returns `(results_csv, summary_json)`.
#[pyfunction]
#[pyo3(signature = (config_json, threads = 0))]
fn simulate(py: Python<'_>, config_json: &str, threads: usize) -> PyResult<(String, String)> {
    let config = ExperimentConfig::from_json(config_json).map_err(value_err)?;
    let out = py
        .detach(|| dpdtol_cli::with_threads(threads, || dpdtol_cli::simulate(&config)))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?
        .map_err(value_err)?;
    Ok((out.results_csv, dpdtol_cli::to_json(&out.summary)))
}

/// True when the inequality suite and the invariant grids all pass.
#[pyfunction]
fn selftest(py: Python<'_>) -> bool {
    py.detach(dpdtol_cli::selftest).pass
}

#[pymodule]
#[pyo3(name = "dpdtol")]
fn dpdtol_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", dpdtol::VERSION)?;
    m.add_class::<PyEnvironment>()?;
    m.add_class::<PyRpSoftmax>()?;
    m.add_function(wrap_pyfunction!(eta_from_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_bound, m)?)?;
    m.add_function(wrap_pyfunction!(master_bound_value, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(softmax_weights, m)?)?;
    m.add_function(wrap_pyfunction!(block_of, m)?)?;
    m.add_function(wrap_pyfunction!(prefix_window, m)?)?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    m.add_function(wrap_pyfunction!(fm, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
