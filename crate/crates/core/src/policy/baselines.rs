//! Comparison policies: follow-the-leader, Hedge, a dyadic Laplace
//! report-noisy-max, and a constant action.

use rand::distr::Open01;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{argmin, check_k, check_loss, Policy, RoundClock};
use crate::error::{invalid, Result};
use crate::schedule::{block_end, MAX_BLOCK};
use crate::softmax::{check_probability_vector, sample_categorical, softmax_weights};

/// Plays the action with the smallest cumulative loss so far; ties go to the
/// lowest index. Not private.
#[derive(Debug, Clone)]
pub struct FollowTheLeader {
    cumulative: Vec<f64>,
    leader: usize,
    clock: RoundClock,
}

impl FollowTheLeader {
    pub fn new(k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(Self {
            cumulative: vec![0.0; k],
            leader: 0,
            clock: RoundClock::new(),
        })
    }

    pub fn cumulative_losses(&self) -> &[f64] {
        &self.cumulative
    }
}

impl Policy for FollowTheLeader {
    fn name(&self) -> &'static str {
        "ftl"
    }

    fn num_actions(&self) -> usize {
        self.cumulative.len()
    }

    fn choose(&self, t: u64) -> Result<usize> {
        self.clock.expect(t)?;
        Ok(self.leader)
    }

    fn observe(&mut self, t: u64, loss: &[f64]) -> Result<()> {
        self.clock.expect(t)?;
        check_loss(t, self.cumulative.len(), loss)?;
        for (c, x) in self.cumulative.iter_mut().zip(loss) {
            *c += x;
        }
        self.leader = argmin(&self.cumulative);
        self.clock.advance();
        Ok(())
    }
}

/// Exponential weights over cumulative losses, resampled every round.
/// Not private.
#[derive(Debug, Clone)]
pub struct Hedge<R = ChaCha8Rng> {
    eta: f64,
    rng: R,
    cumulative: Vec<f64>,
    action: usize,
    clock: RoundClock,
}

impl<R: Rng> Hedge<R> {
    pub fn new(k: usize, eta: f64, mut rng: R) -> Result<Self> {
        check_k(k)?;
        if !eta.is_finite() || eta <= 0.0 {
            return invalid(format!("hedge learning rate must be positive, got {eta}"));
        }
        let cumulative = vec![0.0; k];
        let action = sample_categorical(&softmax_weights(&cumulative, eta)?, &mut rng)?;
        Ok(Self {
            eta,
            rng,
            cumulative,
            action,
            clock: RoundClock::new(),
        })
    }

    /// Law the action of the next round is drawn from.
    pub fn weights(&self) -> Vec<f64> {
        softmax_weights(&self.cumulative, self.eta).expect("finite cumulative losses")
    }
}

impl<R: Rng> Policy for Hedge<R> {
    fn name(&self) -> &'static str {
        "hedge"
    }

    fn num_actions(&self) -> usize {
        self.cumulative.len()
    }

    fn choose(&self, t: u64) -> Result<usize> {
        self.clock.expect(t)?;
        Ok(self.action)
    }

    fn observe(&mut self, t: u64, loss: &[f64]) -> Result<()> {
        self.clock.expect(t)?;
        check_loss(t, self.cumulative.len(), loss)?;
        for (c, x) in self.cumulative.iter_mut().zip(loss) {
            *c += x;
        }
        self.action = sample_categorical(&self.weights(), &mut self.rng)?;
        self.clock.advance();
        Ok(())
    }
}

/// Draws from the Laplace distribution with location 0 and scale `scale`.
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    if u < 0.5 {
        scale * (2.0 * u).ln()
    } else {
        -scale * (2.0 * (1.0 - u)).ln()
    }
}

/// Dyadic-block follow-the-noisy-leader: at the end of each block, the next
/// block's action is the argmin of the full-block cumulative losses
/// perturbed by independent `Laplace(2 / epsilon)` noise.
#[derive(Debug, Clone)]
pub struct LaplaceRnm<R = ChaCha8Rng> {
    epsilon: f64,
    rng: R,
    block: u32,
    action: usize,
    block_sums: Vec<f64>,
    clock: RoundClock,
}

impl<R: Rng> LaplaceRnm<R> {
    pub fn new(k: usize, epsilon: f64, mut rng: R, initial_law: &[f64]) -> Result<Self> {
        check_k(k)?;
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return invalid(format!("epsilon must be positive and finite, got {epsilon}"));
        }
        if initial_law.len() != k {
            return invalid(format!(
                "initial law has {} entries, expected {k}",
                initial_law.len()
            ));
        }
        check_probability_vector(initial_law)?;
        let action = sample_categorical(initial_law, &mut rng)?;
        Ok(Self {
            epsilon,
            rng,
            block: 0,
            action,
            block_sums: vec![0.0; k],
            clock: RoundClock::new(),
        })
    }

    pub fn noise_scale(&self) -> f64 {
        2.0 / self.epsilon
    }
}

impl<R: Rng> Policy for LaplaceRnm<R> {
    fn name(&self) -> &'static str {
        "laplace_rnm"
    }

    fn num_actions(&self) -> usize {
        self.block_sums.len()
    }

    fn choose(&self, t: u64) -> Result<usize> {
        self.clock.expect(t)?;
        Ok(self.action)
    }

    fn observe(&mut self, t: u64, loss: &[f64]) -> Result<()> {
        self.clock.expect(t)?;
        check_loss(t, self.block_sums.len(), loss)?;
        for (s, x) in self.block_sums.iter_mut().zip(loss) {
            *s += x;
        }
        if t == block_end(self.block)? {
            if self.block == MAX_BLOCK {
                return invalid("horizon exceeds the largest supported block");
            }
            let scale = self.noise_scale();
            let noisy: Vec<f64> = self
                .block_sums
                .iter()
                .map(|s| s + sample_laplace(scale, &mut self.rng))
                .collect();
            self.action = argmin(&noisy);
            self.block += 1;
            self.block_sums.iter_mut().for_each(|s| *s = 0.0);
        }
        self.clock.advance();
        Ok(())
    }
}

/// Always plays the same action.
#[derive(Debug, Clone)]
pub struct FixedAction {
    k: usize,
    action: usize,
    clock: RoundClock,
}

impl FixedAction {
    pub fn new(k: usize, action: usize) -> Result<Self> {
        check_k(k)?;
        if action >= k {
            return invalid(format!("action {action} out of range for K = {k}"));
        }
        Ok(Self {
            k,
            action,
            clock: RoundClock::new(),
        })
    }
}

impl Policy for FixedAction {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn num_actions(&self) -> usize {
        self.k
    }

    fn choose(&self, t: u64) -> Result<usize> {
        self.clock.expect(t)?;
        Ok(self.action)
    }

    fn observe(&mut self, t: u64, loss: &[f64]) -> Result<()> {
        self.clock.expect(t)?;
        check_loss(t, self.k, loss)?;
        self.clock.advance();
        Ok(())
    }
}
