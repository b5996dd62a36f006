use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Mean losses of the actions and their gaps to the unique best action.
///
/// Action indices are never permuted: `best_action` records where the
/// minimum sits, so played actions can be scored directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub k: usize,
    pub means: Vec<f64>,
    pub gaps: Vec<f64>,
    pub best_action: usize,
    pub delta_min: f64,
}

impl GapProfile {
    pub fn from_means(means: &[f64]) -> Result<Self> {
        gap_profile_from_means(means)
    }

    pub fn gap(&self, action: usize) -> f64 {
        self.gaps[action]
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }
}

pub fn gap_profile_from_means(means: &[f64]) -> Result<GapProfile> {
    if means.len() < 2 {
        return invalid(format!("need at least 2 actions, got {}", means.len()));
    }
    if let Some((j, m)) = means
        .iter()
        .enumerate()
        .find(|(_, m)| !(0.0..=1.0).contains(*m))
    {
        return invalid(format!("mean of action {j} is {m}, expected a value in [0, 1]"));
    }
    let min_mean = means.iter().copied().fold(f64::INFINITY, f64::min);
    let minimizers: Vec<usize> = (0..means.len()).filter(|&j| means[j] == min_mean).collect();
    if minimizers.len() > 1 {
        return Err(Error::NoUniqueBestAction {
            mean: min_mean,
            actions: minimizers,
        });
    }
    let best_action = minimizers[0];
    let gaps: Vec<f64> = means.iter().map(|m| m - min_mean).collect();
    let delta_min = gaps
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != best_action)
        .map(|(_, &g)| g)
        .fold(f64::INFINITY, f64::min);
    Ok(GapProfile {
        k: means.len(),
        means: means.to_vec(),
        gaps,
        best_action,
        delta_min,
    })
}
