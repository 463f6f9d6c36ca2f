//! Welfare, utility and budget-balance metrics.
//!
//! Values always come from true types (the declaration when no truth is
//! attached); the informed set comes from the declared graph, since that is
//! the market the mechanism actually saw.

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::graph::diffusion_distances;
use crate::mechanisms::{Mechanism, MechanismError};
use crate::model::{AuctionInstance, BuyerId, Outcome};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("outcome allocates to uninformed buyer {0}")]
    UninformedAllocation(BuyerId),
    #[error("outcome allocates {allocated} items but only {k} exist")]
    OverAllocated { allocated: usize, k: usize },
    #[error("outcome covers {got} buyers, instance has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("corpus instances disagree on the number of buyers")]
    MixedBuyerCounts,
    #[error("budget balance needs at least two buyers, got {0}")]
    TooFewBuyers(usize),
    #[error("valuation cap must be positive")]
    NonPositiveCap,
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WelfareReport {
    pub achieved: Value,
    pub optimal: Value,
    /// `achieved / optimal`, or 1 when nothing can be gained.
    pub ratio: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevenueReport {
    pub revenue: Value,
    /// `1 + revenue / ((n - 1) v*)`, when `n >= 2` and `v* > 0`.
    pub normalized: Option<Value>,
}

/// Largest feasible surplus: the `k` largest true marginals pooled over
/// informed buyers. Greedy is exact because marginals are non-increasing.
pub fn optimal_welfare(instance: &AuctionInstance) -> Value {
    let dist = diffusion_distances(instance);
    let mut marginals: Vec<Value> = instance
        .buyer_ids()
        .filter(|id| dist[id.index()].is_some())
        .flat_map(|id| instance.true_type(id).valuations.iter().copied())
        .filter(|v| *v > Value::zero())
        .collect();
    marginals.sort_unstable_by(|a, b| b.cmp(a));
    marginals.into_iter().take(instance.k()).sum()
}

/// Surplus of `outcome` under true valuations.
pub fn achieved_welfare(instance: &AuctionInstance, outcome: &Outcome) -> Result<Value, AnalysisError> {
    check_feasible(instance, outcome)?;
    Ok(instance.buyer_ids().map(|id| instance.true_type(id).value_of(outcome.items(id))).sum())
}

fn check_feasible(instance: &AuctionInstance, outcome: &Outcome) -> Result<(), AnalysisError> {
    if outcome.n() != instance.n() {
        return Err(AnalysisError::SizeMismatch { expected: instance.n(), got: outcome.n() });
    }
    let allocated = outcome.total_items();
    if allocated > instance.k() {
        return Err(AnalysisError::OverAllocated { allocated, k: instance.k() });
    }
    let dist = diffusion_distances(instance);
    if let Some(id) = outcome.winners().find(|id| dist[id.index()].is_none()) {
        return Err(AnalysisError::UninformedAllocation(id));
    }
    Ok(())
}

pub fn welfare_report(instance: &AuctionInstance, outcome: &Outcome) -> Result<WelfareReport, AnalysisError> {
    let achieved = achieved_welfare(instance, outcome)?;
    let optimal = optimal_welfare(instance);
    let ratio = if optimal.is_zero() { Value::one() } else { achieved / optimal };
    Ok(WelfareReport { achieved, optimal, ratio })
}

pub fn revenue_report(instance: &AuctionInstance, outcome: &Outcome) -> RevenueReport {
    let revenue = outcome.revenue();
    let normalized = match instance.value_cap() {
        Some(cap) if instance.n() >= 2 && cap > Value::zero() => {
            Some(Value::one() + revenue / (Value::from_integer(instance.n() as i64 - 1) * cap))
        }
        _ => None,
    };
    RevenueReport { revenue, normalized }
}

/// Quasi-linear utility of `buyer` under its true valuation.
pub fn utility(instance: &AuctionInstance, buyer: BuyerId, outcome: &Outcome) -> Value {
    instance.true_type(buyer).value_of(outcome.items(buyer)) - outcome.payment(buyer)
}

/// Smallest welfare ratio over the corpus. This is an estimate of the
/// worst case, exact only over the sampled profiles.
pub fn empirical_efficiency<M: Mechanism>(mechanism: &M, corpus: &[AuctionInstance]) -> Result<Value, AnalysisError> {
    if corpus.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let ratios: Vec<Value> = corpus
        .par_iter()
        .map(|inst| {
            let out = mechanism.run(inst)?;
            Ok(welfare_report(inst, &out)?.ratio)
        })
        .collect::<Result<_, AnalysisError>>()?;
    Ok(ratios.into_iter().min().expect("corpus is nonempty"))
}

/// `1 + min revenue / ((n - 1) v*)` over the corpus, with `n` counting all
/// buyers.
pub fn empirical_beta<M: Mechanism>(
    mechanism: &M,
    corpus: &[AuctionInstance],
    v_star: Value,
) -> Result<Value, AnalysisError> {
    let first = corpus.first().ok_or(AnalysisError::EmptyCorpus)?;
    let n = first.n();
    if corpus.iter().any(|inst| inst.n() != n) {
        return Err(AnalysisError::MixedBuyerCounts);
    }
    if n < 2 {
        return Err(AnalysisError::TooFewBuyers(n));
    }
    if v_star <= Value::zero() {
        return Err(AnalysisError::NonPositiveCap);
    }
    let revenues: Vec<Value> = corpus
        .par_iter()
        .map(|inst| mechanism.run(inst).map(|out| out.revenue()))
        .collect::<Result<_, MechanismError>>()?;
    let worst = revenues.into_iter().min().expect("corpus is nonempty");
    Ok(Value::one() + worst / (Value::from_integer(n as i64 - 1) * v_star))
}
