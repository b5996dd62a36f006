use serde::{Deserialize, Serialize};

use super::{hoeffding_halfwidth, Z_99};
use crate::episode::RegretTrace;
use crate::error::{invalid, Result};
use crate::sum::CompensatedSum;

/// Mean pseudoregret at one checkpoint with two 99% intervals. Only the
/// Hoeffding interval is distribution-free; the normal-approximation one is
/// diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub t: u64,
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub hoeffding_halfwidth: f64,
    pub empirical_halfwidth: f64,
}

/// Per-checkpoint mean and intervals over aligned traces. Per-trace values
/// at checkpoint `t` lie in `[0, t * max_gap]`.
pub fn regret_summary(traces: &[RegretTrace], max_gap: f64) -> Result<Vec<CheckpointSummary>> {
    let Some(first) = traces.first() else {
        return invalid("no traces to summarize");
    };
    let times: Vec<u64> = first.checkpoints.iter().map(|c| c.t).collect();
    for (i, trace) in traces.iter().enumerate() {
        if trace.checkpoints.len() != times.len()
            || trace.checkpoints.iter().zip(&times).any(|(c, t)| c.t != *t)
        {
            return invalid(format!("trace {i} has different checkpoints"));
        }
    }
    let n = traces.len();
    Ok(times
        .iter()
        .enumerate()
        .map(|(idx, &t)| {
            let values = traces.iter().map(|tr| tr.checkpoints[idx].pseudoregret);
            let mean = values.clone().collect::<CompensatedSum>().value() / n as f64;
            let std_dev = if n > 1 {
                let ss = values.map(|v| (v - mean).powi(2)).collect::<CompensatedSum>().value();
                (ss / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            CheckpointSummary {
                t,
                n,
                mean,
                std_dev,
                hoeffding_halfwidth: hoeffding_halfwidth(t as f64 * max_gap, n),
                empirical_halfwidth: Z_99 * std_dev / (n as f64).sqrt(),
            }
        })
        .collect())
}
