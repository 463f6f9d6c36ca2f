use std::collections::BTreeMap;

use super::{kth_largest, nk_of, Demand, Mechanism, MechanismError};
use crate::graph::build_apg;
use crate::model::{AuctionInstance, BuyerId, Outcome};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapgStatistics {
    /// `n_k = floor(sqrt(k))`: winners each get this many items.
    pub nk: usize,
    /// Sum of the first `n_k` declared marginals, per informed buyer.
    pub sum_valuations: BTreeMap<BuyerId, Value>,
    /// The `n_k`-th largest `n_k`-sum over informed buyers (zero when fewer
    /// than `n_k` are informed).
    pub threshold: Value,
}

/// Runs the generalized APG mechanism for multi-item auctions with
/// decreasing marginal values.
///
/// At most `n_k` winners are chosen by (`n_k`-sum descending, id
/// ascending); each gets exactly `n_k` items and pays the `n_k`-th largest
/// `n_k`-sum among buyers before it on the aligned path. Every informed
/// loser receives the global threshold minus that same statistic.
pub fn gapg(instance: &AuctionInstance) -> Result<(Outcome, GapgStatistics), MechanismError> {
    let nk = nk_of(instance.k())?;
    let apg = build_apg(instance);
    let order = apg.order();

    let sums: Vec<(BuyerId, Value)> = order.iter().map(|&id| (id, instance.declared(id).prefix_sum(nk))).collect();
    let threshold = kth_largest(sums.iter().map(|(_, s)| *s), nk);

    let mut ranked = sums.clone();
    ranked.sort_by(|(ia, sa), (ib, sb)| sb.cmp(sa).then(ia.cmp(ib)));
    let mut is_winner = vec![false; instance.n()];
    for (id, _) in ranked.iter().take(nk) {
        is_winner[id.index()] = true;
    }

    let mut outcome = Outcome::empty(instance.n());
    for (pos, &(id, _)) in sums.iter().enumerate() {
        let close_stat = kth_largest(sums[..pos].iter().map(|(_, s)| *s), nk);
        if is_winner[id.index()] {
            outcome.set(id, nk, close_stat);
        } else {
            outcome.set(id, 0, close_stat - threshold);
        }
    }

    let stats = GapgStatistics { nk, sum_valuations: sums.into_iter().collect(), threshold };
    Ok((outcome, stats))
}

/// The GAPG mechanism as a [`Mechanism`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Gapg;

impl Mechanism for Gapg {
    fn name(&self) -> String {
        "gapg".to_string()
    }

    fn run(&self, instance: &AuctionInstance) -> Result<Outcome, MechanismError> {
        gapg(instance).map(|(outcome, _)| outcome)
    }

    fn demand(&self, instance: &AuctionInstance) -> Demand {
        Demand::Prefix(nk_of(instance.k()).unwrap_or(1))
    }
}
