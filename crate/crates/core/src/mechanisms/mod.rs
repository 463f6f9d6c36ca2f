//! Allocation and payment rules.
//!
//! Every mechanism reads only declared types and only those of informed
//! buyers; uninformed buyers get nothing and pay nothing.

use num_traits::Zero;

use crate::model::{AuctionInstance, ModelError, Outcome};
use crate::value::Value;

mod alpha_apg;
mod gapg;
mod gidm;
mod topk;

pub use alpha_apg::{alpha_apg, AlphaApg, AlphaApgClassification, Group};
pub use gapg::{gapg, Gapg, GapgStatistics};
pub use gidm::{gidm_revised, GidmEvent, GidmRevised, GidmTreeState};
pub use topk::{gapg_top_k_unit, GapgTopKUnit, UnitPricing};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MechanismError {
    #[error("item count k must be positive")]
    ZeroItems,
    #[error("this mechanism sells a single item, but k = {0}")]
    RequiresSingleItem(usize),
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(String),
    #[error("no buyer is informed: nothing to trade")]
    NoInformedBuyers,
    #[error("declared diffusion graph is not a tree rooted at the seller (buyer {0} is reached twice)")]
    NotATree(u32),
    #[error("buyer {0} declares more than one positive marginal; only unit demand is supported")]
    MultiDemand(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which coordinates of a valuation report can move a mechanism's outcome.
/// The auditor uses it to shape its deviation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Demand {
    /// Only the first marginal is read.
    Unit,
    /// The first `n` marginals are read.
    Prefix(usize),
}

/// A direct-revelation mechanism over diffusion auctions.
pub trait Mechanism: Sync {
    fn name(&self) -> String;

    fn run(&self, instance: &AuctionInstance) -> Result<Outcome, MechanismError>;

    fn demand(&self, instance: &AuctionInstance) -> Demand;

    /// Factors by which rival statistics are rescaled inside the rule
    /// (e.g. alpha and 1/alpha). Breakpoints of a buyer's outcome sit at
    /// rival statistics multiplied by these.
    fn threshold_scales(&self) -> Vec<Value> {
        Vec::new()
    }
}

impl<M: Mechanism + ?Sized> Mechanism for &M {
    fn name(&self) -> String {
        (**self).name()
    }
    fn run(&self, instance: &AuctionInstance) -> Result<Outcome, MechanismError> {
        (**self).run(instance)
    }
    fn demand(&self, instance: &AuctionInstance) -> Demand {
        (**self).demand(instance)
    }
    fn threshold_scales(&self) -> Vec<Value> {
        (**self).threshold_scales()
    }
}

impl<M: Mechanism + ?Sized> Mechanism for Box<M> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn run(&self, instance: &AuctionInstance) -> Result<Outcome, MechanismError> {
        (**self).run(instance)
    }
    fn demand(&self, instance: &AuctionInstance) -> Demand {
        (**self).demand(instance)
    }
    fn threshold_scales(&self) -> Vec<Value> {
        (**self).threshold_scales()
    }
}

/// `n_k = floor(sqrt(k))`, in integer arithmetic.
pub fn nk_of(k: usize) -> Result<usize, MechanismError> {
    if k == 0 {
        return Err(MechanismError::ZeroItems);
    }
    Ok(k.isqrt())
}

/// Largest value, or zero over an empty set.
pub fn max_or_zero(values: impl IntoIterator<Item = Value>) -> Value {
    values.into_iter().fold(Value::zero(), |acc, v| if v > acc { v } else { acc })
}

/// The `rank`-th largest value (1-based), or zero when fewer than `rank`
/// values exist.
pub fn kth_largest(values: impl IntoIterator<Item = Value>, rank: usize) -> Value {
    if rank == 0 {
        return Value::zero();
    }
    let mut all: Vec<Value> = values.into_iter().collect();
    if all.len() < rank {
        return Value::zero();
    }
    let (_, kth, _) = all.select_nth_unstable_by(rank - 1, |a, b| b.cmp(a));
    *kth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::int;

    #[test]
    fn nk_examples() {
        assert_eq!(nk_of(1).unwrap(), 1);
        assert_eq!(nk_of(4).unwrap(), 2);
        assert_eq!(nk_of(8).unwrap(), 2);
        assert_eq!(nk_of(9).unwrap(), 3);
        assert_eq!(nk_of(0), Err(MechanismError::ZeroItems));
    }

    #[test]
    fn nk_brackets_k() {
        for k in 1..5000usize {
            let nk = nk_of(k).unwrap();
            assert!(nk * nk <= k && k < (nk + 1) * (nk + 1), "k = {k}");
        }
    }

    #[test]
    fn order_statistics_over_small_sets() {
        let vals = [int(8), int(7), int(8)];
        assert_eq!(kth_largest(vals, 1), int(8));
        assert_eq!(kth_largest(vals, 2), int(8));
        assert_eq!(kth_largest(vals, 3), int(7));
        assert_eq!(kth_largest(vals, 4), int(0));
        assert_eq!(kth_largest([], 1), int(0));
        assert_eq!(max_or_zero([]), int(0));
        assert_eq!(max_or_zero([int(3), int(5)]), int(5));
    }
}
