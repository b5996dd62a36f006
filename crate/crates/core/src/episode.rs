use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{invalid, Result};
use crate::policy::Policy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    /// Sum of the gaps of the actions played in rounds `1..=t`.
    pub pseudoregret: f64,
}

/// Cumulative pseudoregret of one episode at the requested checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub checkpoints: Vec<Checkpoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<usize>>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |c| c.pseudoregret)
    }

    pub fn at(&self, t: u64) -> Option<f64> {
        self.checkpoints
            .iter()
            .find(|c| c.t == t)
            .map(|c| c.pseudoregret)
    }
}

/// Powers of two up to `horizon`, followed by `horizon` itself.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let mut points: Vec<u64> = (0..64)
        .map(|i| 1u64 << i)
        .take_while(|&p| p <= horizon)
        .collect();
    if points.last() != Some(&horizon) && horizon > 0 {
        points.push(horizon);
    }
    points
}

pub fn check_checkpoints(checkpoints: &[u64], horizon: u64) -> Result<()> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("checkpoints must be strictly increasing");
    }
    if let Some(&bad) = checkpoints.iter().find(|&&c| c == 0 || c > horizon) {
        return invalid(format!("checkpoint {bad} outside 1..={horizon}"));
    }
    Ok(())
}

/// Plays `policy` against `env` for rounds `1..=horizon`.
///
/// Regret is accrued from the environment's exact gaps, not from realized
/// losses. Empty `checkpoints` selects [`default_checkpoints`]. The episode
/// may stop mid-block.
pub fn run_episode<P, R>(
    policy: &mut P,
    env: &Environment,
    horizon: u64,
    rng: &mut R,
    checkpoints: &[u64],
    record_actions: bool,
) -> Result<RegretTrace>
where
    P: Policy + ?Sized,
    R: Rng + ?Sized,
{
    if horizon == 0 {
        return invalid("horizon must be at least 1");
    }
    if policy.num_actions() != env.k() {
        return invalid(format!(
            "policy has {} actions, environment has {}",
            policy.num_actions(),
            env.k()
        ));
    }
    let gaps = env.gap_profile()?;
    let defaults;
    let checkpoints = if checkpoints.is_empty() {
        defaults = default_checkpoints(horizon);
        &defaults[..]
    } else {
        check_checkpoints(checkpoints, horizon)?;
        checkpoints
    };

    let mut trace = Vec::with_capacity(checkpoints.len());
    let mut actions = record_actions.then(|| Vec::with_capacity(horizon.min(1 << 24) as usize));
    let mut next_checkpoint = checkpoints.iter().peekable();
    let mut regret = 0.0;
    let mut loss = Vec::with_capacity(env.k());
    let last = *checkpoints.last().expect("non-empty checkpoints");
    for t in 1..=last {
        let action = policy.choose(t)?;
        regret += gaps.gap(action);
        if let Some(a) = actions.as_mut() {
            a.push(action);
        }
        env.sample_into(rng, &mut loss);
        policy.observe(t, &loss)?;
        if next_checkpoint.peek() == Some(&&t) {
            next_checkpoint.next();
            trace.push(Checkpoint {
                t,
                pseudoregret: regret,
            });
        }
    }
    Ok(RegretTrace {
        checkpoints: trace,
        actions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::LossVector;
    use crate::policy::{FixedAction, RpSoftmax};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checkpoint_defaults() {
        assert_eq!(default_checkpoints(1), vec![1]);
        assert_eq!(default_checkpoints(8), vec![1, 2, 4, 8]);
        assert_eq!(default_checkpoints(10), vec![1, 2, 4, 8, 10]);
        assert!(check_checkpoints(&[1, 4, 2], 10).is_err());
        assert!(check_checkpoints(&[0, 4], 10).is_err());
        assert!(check_checkpoints(&[4, 11], 10).is_err());
    }

    #[test]
    fn best_action_has_zero_regret() {
        let env = Environment::bernoulli(vec![0.6, 0.2, 0.9]).unwrap();
        let mut p = FixedAction::new(3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = run_episode(&mut p, &env, 100, &mut rng, &[], false).unwrap();
        assert!(trace.checkpoints.iter().all(|c| c.pseudoregret == 0.0));
        assert_eq!(trace.checkpoints.last().unwrap().t, 100);
    }

    #[test]
    fn fixed_suboptimal_action() {
        let env = Environment::bernoulli(vec![0.25, 0.75]).unwrap();
        let mut p = FixedAction::new(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = run_episode(&mut p, &env, 64, &mut rng, &[3, 10, 64], false).unwrap();
        for c in &trace.checkpoints {
            assert_eq!(c.pseudoregret, 0.5 * c.t as f64);
        }
    }

    #[test]
    fn increments_are_gaps() {
        let env = Environment::bernoulli(vec![0.3, 0.5, 0.9]).unwrap();
        let gaps = env.gap_profile().unwrap();
        let mut p = RpSoftmax::uniform(3, 0.5, ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let all: Vec<u64> = (1..=300).collect();
        let trace = run_episode(&mut p, &env, 300, &mut rng, &all, true).unwrap();
        let actions = trace.actions.as_ref().unwrap();
        let mut prev = 0.0;
        for (c, &a) in trace.checkpoints.iter().zip(actions) {
            let inc = c.pseudoregret - prev;
            assert!((inc - gaps.gap(a)).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&inc) || inc.abs() < 1e-12);
            prev = c.pseudoregret;
        }
    }

    #[test]
    fn errors_propagate() {
        let tied = Environment::deterministic(LossVector::new(vec![0.5, 0.5]).unwrap()).unwrap();
        let mut p = FixedAction::new(2, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(run_episode(&mut p, &tied, 10, &mut rng, &[], false).is_err());

        let env = Environment::bernoulli(vec![0.1, 0.5, 0.9]).unwrap();
        assert!(run_episode(&mut p, &env, 10, &mut rng, &[], false).is_err());
        assert!(run_episode(&mut p, &tied, 0, &mut rng, &[], false).is_err());
    }
}
