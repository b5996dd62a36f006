//! JSON experiment configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use dpdtol::episode::{check_checkpoints, default_checkpoints};
use dpdtol::schedule::{block_end, MAX_BLOCK};
use dpdtol::{Atom, Environment, LossVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Bernoulli { means: Vec<f64> },
    Deterministic { vector: Vec<f64> },
    FiniteSupport { atoms: Vec<Atom> },
    Correlated { means: Vec<f64>, coupling: f64 },
}

impl EnvSpec {
    pub fn build(&self) -> dpdtol::Result<Environment> {
        match self {
            EnvSpec::Bernoulli { means } => Environment::bernoulli(means.clone()),
            EnvSpec::Deterministic { vector } => {
                Environment::deterministic(LossVector::new(vector.clone())?)
            }
            EnvSpec::FiniteSupport { atoms } => Environment::finite_support(atoms.clone()),
            EnvSpec::Correlated { means, coupling } => {
                Environment::correlated(means.clone(), *coupling)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    RpSoftmax {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial_law: Option<Vec<f64>>,
    },
    Ftl,
    Hedge { eta: f64 },
    LaplaceRnm,
    Fixed { action: usize },
}

impl AlgorithmSpec {
    pub fn label(&self) -> String {
        match self {
            AlgorithmSpec::RpSoftmax { .. } => "rp_softmax".into(),
            AlgorithmSpec::Ftl => "ftl".into(),
            AlgorithmSpec::Hedge { eta } => format!("hedge(eta={eta})"),
            AlgorithmSpec::LaplaceRnm => "laplace_rnm".into(),
            AlgorithmSpec::Fixed { action } => format!("fixed({action})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    One(f64),
    Sweep(Vec<f64>),
}

impl EpsilonSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            EpsilonSpec::One(e) => vec![*e],
            EpsilonSpec::Sweep(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvSpec,
    /// Optional cross-check of the environment's action count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub epsilon: EpsilonSpec,
    pub horizon: u64,
    /// Defaults to the powers of two up to `horizon`, then `horizon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    pub algorithms: Vec<AlgorithmSpec>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{name}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks every field and fills in defaults. Returns the environment.
    pub fn resolve(&mut self) -> Result<Environment> {
        let env = self.environment.build().map_err(|e| field("environment", e))?;
        env.gap_profile().map_err(|e| field("environment", e))?;
        let k = env.k();
        if let Some(declared) = self.k {
            if declared != k {
                return Err(field("k", format!("{declared} does not match the environment's {k} actions")));
            }
        }
        self.k = Some(k);

        let epsilons = self.epsilon.values();
        if epsilons.is_empty() {
            return Err(field("epsilon", "sweep must not be empty"));
        }
        for (i, e) in epsilons.iter().enumerate() {
            if !e.is_finite() || *e <= 0.0 {
                return Err(field(&format!("epsilon[{i}]"), format!("must be positive, got {e}")));
            }
        }

        let max_horizon = block_end(MAX_BLOCK).expect("valid block");
        if self.horizon == 0 || self.horizon > max_horizon {
            return Err(field("horizon", format!("must lie in 1..={max_horizon}")));
        }
        match &self.checkpoints {
            None => self.checkpoints = Some(default_checkpoints(self.horizon)),
            Some(c) if c.is_empty() => return Err(field("checkpoints", "must not be empty")),
            Some(c) => check_checkpoints(c, self.horizon).map_err(|e| field("checkpoints", e))?,
        }

        if self.algorithms.is_empty() {
            return Err(field("algorithms", "must not be empty"));
        }
        for (i, alg) in self.algorithms.iter().enumerate() {
            let name = format!("algorithms[{i}]");
            match alg {
                AlgorithmSpec::Hedge { eta } if !eta.is_finite() || *eta <= 0.0 => {
                    return Err(field(&format!("{name}.eta"), format!("must be positive, got {eta}")));
                }
                AlgorithmSpec::Fixed { action } if *action >= k => {
                    return Err(field(&format!("{name}.action"), format!("must be below K = {k}")));
                }
                AlgorithmSpec::RpSoftmax { initial_law: Some(law) } => {
                    if law.len() != k {
                        return Err(field(&format!("{name}.initial_law"), format!("needs {k} entries")));
                    }
                    dpdtol::softmax::check_probability_vector(law)
                        .map_err(|e| field(&format!("{name}.initial_law"), e))?;
                }
                _ => {}
            }
        }
        if self.trials == 0 {
            return Err(field("trials", "must be at least 1"));
        }
        Ok(env)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "environment": {"kind": "bernoulli", "means": [0.2, 0.8]},
        "epsilon": 1.0,
        "horizon": 10,
        "algorithms": [{"kind": "rp_softmax"}, {"kind": "hedge", "eta": 0.1}],
        "trials": 2,
        "master_seed": 7
    }"#;

    #[test]
    fn parses_and_fills_defaults() {
        let mut c = ExperimentConfig::from_json(BASE).unwrap();
        let env = c.resolve().unwrap();
        assert_eq!(env.k(), 2);
        assert_eq!(c.checkpoints, Some(vec![1, 2, 4, 8, 10]));
        assert_eq!(c.k, Some(2));
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = BASE.replace("\"trials\"", "\"trails\": 3, \"trials\"");
        assert!(ExperimentConfig::from_json(&text).is_err());
        let text = BASE.replace(r#"{"kind": "rp_softmax"}"#, r#"{"kind": "rp_softmax", "eta": 1}"#);
        assert!(ExperimentConfig::from_json(&text).is_err());
        let text = BASE.replace(r#""means": [0.2, 0.8]"#, r#""means": [0.2, 0.8], "coupling": 0.1"#);
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn field_level_errors() {
        let cases = [
            (BASE.replace("\"epsilon\": 1.0", "\"epsilon\": [0.5, -1]"), "epsilon[1]"),
            (BASE.replace("\"eta\": 0.1", "\"eta\": 0"), "algorithms[1].eta"),
            (BASE.replace("\"horizon\": 10", "\"horizon\": 0"), "horizon"),
            (BASE.replace("[0.2, 0.8]", "[0.5, 0.5]"), "environment"),
            (BASE.replace("\"trials\": 2", "\"trials\": 0"), "trials"),
            (BASE.replace("\"horizon\": 10", "\"horizon\": 10, \"checkpoints\": [4, 2]"), "checkpoints"),
            (BASE.replace("\"horizon\": 10", "\"horizon\": 10, \"k\": 3"), "k"),
        ];
        for (text, name) in cases {
            let mut c = ExperimentConfig::from_json(&text).unwrap();
            let err = c.resolve().unwrap_err().to_string();
            assert!(err.contains(name), "{err}");
        }
    }

    #[test]
    fn epsilon_sweep() {
        let text = BASE.replace("\"epsilon\": 1.0", "\"epsilon\": [0.1, 0.5, 2.0]");
        let c = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(c.epsilon.values(), vec![0.1, 0.5, 2.0]);
    }
}
