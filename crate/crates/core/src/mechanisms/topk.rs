use num_traits::Zero;

use super::{kth_largest, max_or_zero, Demand, Mechanism, MechanismError};
use crate::graph::build_apg;
use crate::model::{AuctionInstance, BuyerId, Outcome};
use crate::value::Value;

/// Which order statistics price the unit-demand top-k variant.
///
/// With `k` winners the winning threshold for a buyer is the `k`-th largest
/// rival report; the variants differ in whether the winner's price and the
/// loser's transfer track that statistic or the maximum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum UnitPricing {
    /// Winner pays the `k`-th largest report before it on the path; a loser
    /// receives the global `k`-th largest report minus that statistic.
    #[default]
    KthStatistic,
    /// Winner pays the largest report before it; a loser receives the
    /// global `k`-th largest report minus that maximum.
    MixedStatistic,
    /// Winner pays the largest report before it; a loser receives the
    /// global maximum minus that maximum.
    MaxStatistic,
}

impl UnitPricing {
    pub const ALL: [UnitPricing; 3] =
        [UnitPricing::KthStatistic, UnitPricing::MixedStatistic, UnitPricing::MaxStatistic];

    pub fn as_str(self) -> &'static str {
        match self {
            UnitPricing::KthStatistic => "kth",
            UnitPricing::MixedStatistic => "mixed",
            UnitPricing::MaxStatistic => "max",
        }
    }
}

impl std::str::FromStr for UnitPricing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UnitPricing::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown pricing `{s}` (expected kth, mixed or max)"))
    }
}

/// Unit-demand variant of GAPG: the top `k` informed reports win one item
/// each (ties to younger buyers). Only first marginals are read.
pub fn gapg_top_k_unit(instance: &AuctionInstance, pricing: UnitPricing) -> Result<Outcome, MechanismError> {
    let k = instance.k();
    if k == 0 {
        return Err(MechanismError::ZeroItems);
    }
    let apg = build_apg(instance);
    let reports: Vec<(BuyerId, Value)> =
        apg.order().iter().map(|&id| (id, instance.declared(id).marginal(1))).collect();

    let mut ranked = reports.clone();
    ranked.sort_by(|(ia, va), (ib, vb)| vb.cmp(va).then(ia.cmp(ib)));
    let mut is_winner = vec![false; instance.n()];
    for (id, _) in ranked.iter().take(k) {
        is_winner[id.index()] = true;
    }

    let global = match pricing {
        UnitPricing::KthStatistic | UnitPricing::MixedStatistic => kth_largest(reports.iter().map(|(_, v)| *v), k),
        UnitPricing::MaxStatistic => max_or_zero(reports.iter().map(|(_, v)| *v)),
    };

    let mut outcome = Outcome::empty(instance.n());
    let mut slots = vec![vec![Value::zero()]; instance.n()];
    for (pos, &(id, _)) in reports.iter().enumerate() {
        let close = reports[..pos].iter().map(|(_, v)| *v);
        let close_stat = match pricing {
            UnitPricing::KthStatistic => kth_largest(close, k),
            UnitPricing::MixedStatistic | UnitPricing::MaxStatistic => max_or_zero(close),
        };
        if is_winner[id.index()] {
            outcome.set(id, 1, close_stat);
            slots[id.index()] = vec![Value::zero(), close_stat];
        } else {
            outcome.set(id, 0, close_stat - global);
            slots[id.index()] = vec![close_stat - global];
        }
    }
    outcome.set_per_item(slots);
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GapgTopKUnit {
    pub pricing: UnitPricing,
}

impl GapgTopKUnit {
    pub fn new(pricing: UnitPricing) -> Self {
        GapgTopKUnit { pricing }
    }
}

impl Mechanism for GapgTopKUnit {
    fn name(&self) -> String {
        format!("gapg-topk(pricing={})", self.pricing.as_str())
    }

    fn run(&self, instance: &AuctionInstance) -> Result<Outcome, MechanismError> {
        gapg_top_k_unit(instance, self.pricing)
    }

    fn demand(&self, _instance: &AuctionInstance) -> Demand {
        Demand::Unit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BuyerType;
    use crate::value::int;

    fn chain(k: usize, values: &[i64]) -> AuctionInstance {
        let n = values.len() as u32;
        let buyers = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let id = i as u32 + 1;
                BuyerType::unit(int(v), if id < n { vec![BuyerId(id + 1)] } else { vec![] })
            })
            .collect();
        AuctionInstance::new(k, [BuyerId(1)], buyers).unwrap()
    }

    #[test]
    fn single_item_matches_every_reading() {
        for pricing in UnitPricing::ALL {
            let out = gapg_top_k_unit(&chain(1, &[4, 10]), pricing).unwrap();
            assert_eq!(out.allocation(), &[0, 1]);
            assert_eq!(out.payment(BuyerId(2)), int(4));
            assert_eq!(out.payment(BuyerId(1)), int(-10));
        }
    }

    #[test]
    fn top_two_of_three() {
        let out = gapg_top_k_unit(&chain(2, &[1, 5, 3]), UnitPricing::KthStatistic).unwrap();
        assert_eq!(out.allocation(), &[0, 1, 1]);
        // Buyer 3's close set {1, 5}: its 2nd largest is 1.
        assert_eq!(out.payment(BuyerId(3)), int(1));
        assert_eq!(out.payment(BuyerId(2)), int(0));
        // Global 2nd largest 3, buyer 1 has nobody before it.
        assert_eq!(out.payment(BuyerId(1)), int(-3));

        let mixed = gapg_top_k_unit(&chain(2, &[1, 5, 3]), UnitPricing::MixedStatistic).unwrap();
        assert_eq!(mixed.payment(BuyerId(3)), int(5));
    }

    #[test]
    fn no_scarcity_everyone_wins() {
        let out = gapg_top_k_unit(&chain(5, &[2, 7, 1]), UnitPricing::KthStatistic).unwrap();
        assert_eq!(out.allocation(), &[1, 1, 1]);
        assert!(out.net_payments().iter().all(Zero::is_zero));
    }

    #[test]
    fn parses_pricing_names() {
        for p in UnitPricing::ALL {
            assert_eq!(p.as_str().parse::<UnitPricing>().unwrap(), p);
        }
        assert!("median".parse::<UnitPricing>().is_err());
    }
}
