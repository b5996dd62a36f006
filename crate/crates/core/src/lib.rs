//! Private stochastic online learning with full information.
//!
//! The centerpiece is [`policy::RpSoftmax`], which plays one action per
//! dyadic block and picks the next block's action with an exponential
//! mechanism applied to a data-independent random prefix of the previous
//! block. Around it sit:
//!
//! - [`env`]: i.i.d. loss generators with exactly known means,
//! - [`episode`]: the choose/observe driver measuring pseudoregret,
//! - [`audit`]: exact output laws on small datasets and neighbor sweeps
//!   against the `exp(2 eta)` privacy bound,
//! - [`analysis`]: the softmax-error sequence `F_m`, closed-form bounds,
//!   and the inequality suite behind them.

pub mod analysis;
pub mod audit;
pub mod env;
pub mod episode;
mod error;
pub mod gaps;
pub mod params;
pub mod policy;
pub mod schedule;
pub mod seed;
pub mod softmax;
pub mod sum;

pub use env::{Atom, Environment, FiniteSupport, LossVector};
pub use episode::{run_episode, Checkpoint, RegretTrace};
pub use error::{Error, Result};
pub use gaps::{gap_profile_from_means, GapProfile};
pub use params::{eta_from_epsilon, theorem_bound, PrivacyParams, TheoremBound};
pub use policy::{FixedAction, FollowTheLeader, Hedge, LaplaceRnm, Policy, RpSoftmax};
pub use schedule::{block_end, block_len, block_of, block_start, prefix_window};
pub use softmax::{sample_categorical, softmax_weights};

/// Version string embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
