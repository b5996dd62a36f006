//! Online policies following the choose-then-observe protocol.
//!
//! For every round `t = 1, 2, ...` the driver first calls [`Policy::choose`]
//! and then [`Policy::observe`] with the full loss vector of that round.
//! `choose` is a pure read and only depends on rounds before `t`.

mod baselines;
mod rp_softmax;

pub use baselines::{sample_laplace, FixedAction, FollowTheLeader, Hedge, LaplaceRnm};
pub use rp_softmax::RpSoftmax;

use crate::error::{invalid, Error, Result};

pub trait Policy {
    fn name(&self) -> &'static str;

    fn num_actions(&self) -> usize;

    /// Action played at round `t`, which must be the next unobserved round.
    fn choose(&self, t: u64) -> Result<usize>;

    /// Feeds the loss vector of round `t`. Must be called once per round, in
    /// order.
    fn observe(&mut self, t: u64, loss: &[f64]) -> Result<()>;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn num_actions(&self) -> usize {
        (**self).num_actions()
    }

    fn choose(&self, t: u64) -> Result<usize> {
        (**self).choose(t)
    }

    fn observe(&mut self, t: u64, loss: &[f64]) -> Result<()> {
        (**self).observe(t, loss)
    }
}

/// Uniform initial-action law over `k` actions.
pub fn uniform_law(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

/// Point mass on `action`.
pub fn point_mass(k: usize, action: usize) -> Vec<f64> {
    let mut law = vec![0.0; k];
    law[action] = 1.0;
    law
}

/// Tracks the next expected round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct RoundClock {
    next: u64,
}

impl RoundClock {
    pub(crate) fn new() -> Self {
        Self { next: 1 }
    }

    pub(crate) fn next(&self) -> u64 {
        self.next
    }

    pub(crate) fn expect(&self, t: u64) -> Result<()> {
        if t != self.next {
            return Err(Error::ProtocolViolation {
                expected: self.next,
                got: t,
            });
        }
        Ok(())
    }

    pub(crate) fn advance(&mut self) {
        self.next += 1;
    }
}

pub(crate) fn check_loss(round: u64, k: usize, loss: &[f64]) -> Result<()> {
    if loss.len() != k {
        return invalid(format!(
            "round {round}: loss vector has {} entries, expected {k}",
            loss.len()
        ));
    }
    if let Some((index, &value)) = loss
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::InvalidLoss {
            round,
            index,
            value,
        });
    }
    Ok(())
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return invalid(format!("need at least 2 actions, got {k}"));
    }
    Ok(())
}

/// Index of the smallest entry, lowest index on ties.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = j;
        }
    }
    best
}
