use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_k, check_loss, Policy, RoundClock};
use crate::error::{invalid, Result};
use crate::params::{eta_from_epsilon, PrivacyParams};
use crate::schedule::{block_end, prefix_window, MAX_BLOCK};
use crate::softmax::{check_probability_vector, sample_categorical, softmax_weights};

/// Randomized-prefix softmax selection over dyadic blocks.
///
/// One action is played for the whole of block `r`. When the block starts,
/// a prefix length `M_r` is drawn uniformly from [`prefix_window`] using only
/// internal randomness. The first `M_r` loss vectors of the block are summed;
/// later ones are dropped on arrival. At the last round of the block the
/// action for block `r + 1` is drawn from the softmax of the negated prefix
/// sums with inverse temperature `eta = min(epsilon / 2, 1/8)`.
///
/// Each loss vector influences exactly one selection, which makes the whole
/// action sequence `2 * eta`-differentially private at the event level.
#[derive(Debug, Clone)]
pub struct RpSoftmax<R = ChaCha8Rng> {
    params: PrivacyParams,
    k: usize,
    rng: R,
    block: u32,
    action: usize,
    prefix_len: u64,
    prefix_sums: Vec<f64>,
    position: u64,
    clock: RoundClock,
}

impl<R: Rng> RpSoftmax<R> {
    /// Starts at block 0 with the initial action drawn from `initial_law`.
    pub fn new(k: usize, epsilon: f64, mut rng: R, initial_law: &[f64]) -> Result<Self> {
        check_k(k)?;
        let params = eta_from_epsilon(epsilon)?;
        if initial_law.len() != k {
            return invalid(format!(
                "initial law has {} entries, expected {k}",
                initial_law.len()
            ));
        }
        check_probability_vector(initial_law)?;
        let action = sample_categorical(initial_law, &mut rng)?;
        Ok(Self {
            params,
            k,
            rng,
            block: 0,
            action,
            prefix_len: 1,
            prefix_sums: vec![0.0; k],
            position: 0,
            clock: RoundClock::new(),
        })
    }

    /// Same as [`RpSoftmax::new`] with a uniform initial action.
    pub fn uniform(k: usize, epsilon: f64, rng: R) -> Result<Self> {
        check_k(k)?;
        Self::new(k, epsilon, rng, &super::uniform_law(k))
    }

    pub fn params(&self) -> PrivacyParams {
        self.params
    }

    pub fn current_block(&self) -> u32 {
        self.block
    }

    pub fn current_action(&self) -> usize {
        self.action
    }

    /// Prefix length `M_r` of the current block.
    pub fn prefix_len(&self) -> u64 {
        self.prefix_len
    }

    /// Sums of the loss vectors seen so far within the current prefix.
    pub fn prefix_sums(&self) -> &[f64] {
        &self.prefix_sums
    }

    /// Number of rounds of the current block observed so far.
    pub fn position_in_block(&self) -> u64 {
        self.position
    }

    pub fn next_round(&self) -> u64 {
        self.clock.next()
    }

    /// Law of the next block's action given the prefix accumulated so far.
    pub fn selection_law(&self) -> Vec<f64> {
        softmax_weights(&self.prefix_sums, self.params.eta)
            .expect("prefix sums are finite and eta is positive")
    }

    fn start_next_block(&mut self) -> Result<()> {
        let law = self.selection_law();
        self.action = sample_categorical(&law, &mut self.rng)?;
        if self.block == MAX_BLOCK {
            return invalid("horizon exceeds the largest supported block");
        }
        self.block += 1;
        self.prefix_len = self.rng.random_range(prefix_window(self.block)?);
        self.prefix_sums.iter_mut().for_each(|s| *s = 0.0);
        self.position = 0;
        Ok(())
    }
}

impl<R: Rng> Policy for RpSoftmax<R> {
    fn name(&self) -> &'static str {
        "rp_softmax"
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
        self.position += 1;
        if self.position <= self.prefix_len {
            for (s, x) in self.prefix_sums.iter_mut().zip(loss) {
                *s += x;
            }
        }
        if t == block_end(self.block)? {
            self.start_next_block()?;
        }
        self.clock.advance();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::policy::point_mass;
    use crate::schedule::block_of;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn point_mass_initial_action() {
        for seed in 0..50 {
            let p = RpSoftmax::new(5, 1.0, rng(seed), &point_mass(5, 3)).unwrap();
            assert_eq!(p.choose(1).unwrap(), 3);
        }
    }

    #[test]
    fn uniform_initial_action() {
        // Hoeffding: 1e5 draws keep each frequency within 0.01 of 1/4 except
        // with probability ~1e-8.
        let n = 100_000;
        let mut counts = [0usize; 4];
        for seed in 0..n {
            let p = RpSoftmax::uniform(4, 1.0, rng(seed)).unwrap();
            counts[p.choose(1).unwrap()] += 1;
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((f - 0.25).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn eta_from_budget() {
        let p = RpSoftmax::uniform(2, 0.1, rng(0)).unwrap();
        assert_eq!(p.params().eta, 0.05);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(RpSoftmax::new(2, 1.0, rng(0), &[0.5, 0.6]).is_err());
        assert!(RpSoftmax::new(2, 1.0, rng(0), &[1.0]).is_err());
        assert!(RpSoftmax::uniform(1, 1.0, rng(0)).is_err());
        assert!(RpSoftmax::uniform(2, 0.0, rng(0)).is_err());

        let mut p = RpSoftmax::uniform(2, 1.0, rng(0)).unwrap();
        assert!(matches!(
            p.observe(1, &[0.5, 1.5]),
            Err(Error::InvalidLoss { index: 1, .. })
        ));
        assert!(p.observe(1, &[0.5]).is_err());
        assert!(matches!(
            p.choose(2),
            Err(Error::ProtocolViolation { expected: 1, got: 2 })
        ));
        p.observe(1, &[0.5, 0.5]).unwrap();
        assert!(p.observe(1, &[0.5, 0.5]).is_err());
        assert!(p.choose(1).is_err());
        assert!(p.choose(2).is_ok());
    }

    #[test]
    fn block_constancy_and_transition() {
        let mut p = RpSoftmax::uniform(3, 0.5, rng(42)).unwrap();
        let mut last = None;
        for t in 1..=255u64 {
            let a = p.choose(t).unwrap();
            let r = block_of(t).unwrap();
            if t > 1 && r == block_of(t - 1).unwrap() {
                assert_eq!(Some(a), last);
            }
            last = Some(a);
            p.observe(t, &[0.3, 0.6, 0.9]).unwrap();
            if t == block_end(r).unwrap() {
                assert_eq!(p.current_block(), r + 1);
                assert_eq!(p.choose(t + 1).unwrap(), p.current_action());
                assert!(prefix_window(r + 1).unwrap().contains(&p.prefix_len()));
            }
        }
    }

    #[test]
    fn prefix_sums_stop_at_prefix_length() {
        let mut p = RpSoftmax::uniform(2, 1.0, rng(1)).unwrap();
        // Run through blocks 0..=2 to reach block 3 (rounds 8..=15).
        for t in 1..8 {
            p.observe(t, &[0.0, 0.0]).unwrap();
        }
        assert_eq!(p.current_block(), 3);
        let m = p.prefix_len();
        for s in 1..8u64 {
            p.observe(7 + s, &[1.0, 0.25]).unwrap();
            let used = s.min(m) as f64;
            assert_eq!(p.prefix_sums(), &[used, 0.25 * used]);
            assert_eq!(p.position_in_block(), s);
        }
    }

    #[test]
    fn selection_law_after_first_block() {
        // Block 1 = rounds 2, 3 and M_1 = 2, so both rows feed the selection.
        let law = softmax_weights(&[0.0, 2.0], 0.125).unwrap();
        let expected = 1.0 / (1.0 + (-0.25f64).exp());
        assert!((law[0] - expected).abs() < 1e-15);
        assert!((law[0] - 0.5622).abs() < 1e-4 && (law[1] - 0.4378).abs() < 1e-4);

        let n = 40_000u64;
        let mut zeros = 0;
        for seed in 0..n {
            let mut p = RpSoftmax::uniform(2, 1.0, rng(seed)).unwrap();
            p.observe(1, &[0.0, 0.0]).unwrap();
            assert_eq!(p.prefix_len(), 2);
            p.observe(2, &[0.0, 1.0]).unwrap();
            assert_eq!(p.prefix_sums(), &[0.0, 1.0]);
            p.observe(3, &[0.0, 1.0]).unwrap();
            zeros += usize::from(p.choose(4).unwrap() == 0);
        }
        let freq = zeros as f64 / n as f64;
        let sigma = (law[0] * law[1] / n as f64).sqrt();
        assert!((freq - law[0]).abs() < 3.0 * sigma, "{freq} vs {}", law[0]);
    }

    #[test]
    fn identical_coordinates_give_uniform_law() {
        let mut p = RpSoftmax::uniform(4, 1.0, rng(2)).unwrap();
        for t in 1..=3 {
            p.observe(t, &[0.7; 4]).unwrap();
        }
        for t in 4..=6 {
            p.observe(t, &[0.2; 4]).unwrap();
        }
        for w in p.selection_law() {
            assert!((w - 0.25).abs() < 1e-15);
        }
    }
}
