use std::collections::BTreeSet;

use num_traits::{One, Zero};

use super::{max_or_zero, Demand, Mechanism, MechanismError};
use crate::graph::build_apg;
use crate::model::{AuctionInstance, BuyerId, Outcome};
use crate::value::{format_value, Value};

/// Payment class of an informed buyer under alpha-APG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    /// Winner facing a large valuation further along the path; pays the
    /// largest valuation before it.
    Group1,
    /// Loser before the winner; receives `alpha * v*_N - v*_{close}`.
    Group2,
    /// Winner holding the top valuation with a strong rival before it; pays
    /// the largest earlier valuation divided by alpha.
    Group3,
    /// Loser after the winner; pays nothing.
    Group4,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaApgClassification {
    /// Per buyer slot; `None` for uninformed buyers.
    pub groups: Vec<Option<Group>>,
    pub winner: Option<BuyerId>,
    /// `M`: informed buyers whose report is at least alpha times the top one.
    pub candidates: BTreeSet<BuyerId>,
    pub alpha: Value,
}

impl AlphaApgClassification {
    pub fn group(&self, id: BuyerId) -> Option<Group> {
        self.groups.get(id.index()).copied().flatten()
    }
}

fn check_alpha(alpha: Value) -> Result<(), MechanismError> {
    if alpha <= Value::zero() || alpha >= Value::one() {
        return Err(MechanismError::InvalidAlpha(format_value(&alpha)));
    }
    Ok(())
}

/// Runs the single-item alpha-APG mechanism.
///
/// The winner is the first buyer on the aligned path whose report reaches
/// `alpha` times the largest report. Buyers before it are subsidized, buyers
/// after it pay nothing.
pub fn alpha_apg(
    instance: &AuctionInstance,
    alpha: Value,
) -> Result<(Outcome, AlphaApgClassification), MechanismError> {
    check_alpha(alpha)?;
    if instance.k() != 1 {
        return Err(MechanismError::RequiresSingleItem(instance.k()));
    }
    let apg = build_apg(instance);
    if apg.is_empty() {
        return Err(MechanismError::NoInformedBuyers);
    }
    let order = apg.order();
    let report = |id: BuyerId| instance.declared(id).marginal(1);

    let top = max_or_zero(order.iter().map(|&id| report(id)));
    let threshold = alpha * top;
    let candidates: BTreeSet<BuyerId> = order.iter().copied().filter(|&id| report(id) >= threshold).collect();
    // The top report always clears its own alpha-scaled threshold, so M is
    // never empty here.
    let win_pos =
        order.iter().position(|&id| report(id) >= threshold).expect("the buyer with the top report is a candidate");
    let winner = order[win_pos];

    let n = instance.n();
    let mut outcome = Outcome::empty(n);
    let mut groups = vec![None; n];
    let mut slots = vec![vec![Value::zero()]; n];
    let mut close_max = Value::zero();
    for (pos, &id) in order.iter().enumerate() {
        let (group, payment) = if pos < win_pos {
            (Group::Group2, close_max - threshold)
        } else if pos == win_pos {
            let far_max = max_or_zero(order[pos + 1..].iter().map(|&j| report(j)));
            if close_max < alpha * far_max {
                (Group::Group1, close_max)
            } else {
                (Group::Group3, close_max / alpha)
            }
        } else {
            (Group::Group4, Value::zero())
        };
        groups[id.index()] = Some(group);
        if id == winner {
            outcome.set(id, 1, payment);
            slots[id.index()] = vec![Value::zero(), payment];
        } else {
            outcome.set(id, 0, payment);
            slots[id.index()] = vec![payment];
        }
        let v = report(id);
        if v > close_max {
            close_max = v;
        }
    }
    outcome.set_per_item(slots);

    Ok((outcome, AlphaApgClassification { groups, winner: Some(winner), candidates, alpha }))
}

/// The alpha-APG mechanism as a [`Mechanism`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlphaApg {
    alpha: Value,
}

impl AlphaApg {
    pub fn new(alpha: Value) -> Result<Self, MechanismError> {
        check_alpha(alpha)?;
        Ok(AlphaApg { alpha })
    }

    pub fn alpha(&self) -> Value {
        self.alpha
    }
}

impl Mechanism for AlphaApg {
    fn name(&self) -> String {
        format!("alpha-apg(alpha={})", format_value(&self.alpha))
    }

    fn run(&self, instance: &AuctionInstance) -> Result<Outcome, MechanismError> {
        alpha_apg(instance, self.alpha).map(|(outcome, _)| outcome)
    }

    fn demand(&self, _instance: &AuctionInstance) -> Demand {
        Demand::Unit
    }

    fn threshold_scales(&self) -> Vec<Value> {
        vec![self.alpha, self.alpha.recip()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BuyerType;
    use crate::value::{frac, int};

    fn chain(values: &[i64]) -> AuctionInstance {
        let n = values.len() as u32;
        let buyers = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let id = i as u32 + 1;
                BuyerType::unit(int(v), if id < n { vec![BuyerId(id + 1)] } else { vec![] })
            })
            .collect();
        AuctionInstance::new(1, [BuyerId(1)], buyers).unwrap()
    }

    #[test]
    fn near_buyer_wins_when_close_enough() {
        let (out, cls) = alpha_apg(&chain(&[10, 5]), frac(1, 2)).unwrap();
        assert_eq!(cls.winner, Some(BuyerId(1)));
        assert_eq!(cls.candidates, [BuyerId(1), BuyerId(2)].into_iter().collect());
        assert_eq!(cls.group(BuyerId(1)), Some(Group::Group1));
        assert_eq!(cls.group(BuyerId(2)), Some(Group::Group4));
        assert_eq!(out.payment(BuyerId(1)), int(0));
        assert_eq!(out.payment(BuyerId(2)), int(0));
        assert_eq!(out.revenue(), int(0));
    }

    #[test]
    fn far_top_buyer_pays_scaled_price_and_subsidizes_near_one() {
        let (out, cls) = alpha_apg(&chain(&[4, 10]), frac(1, 2)).unwrap();
        assert_eq!(cls.winner, Some(BuyerId(2)));
        assert_eq!(cls.group(BuyerId(2)), Some(Group::Group3));
        assert_eq!(cls.group(BuyerId(1)), Some(Group::Group2));
        assert_eq!(out.payment(BuyerId(2)), int(8));
        // Buyer 1 has nobody before it: subsidy alpha * 10 - 0.
        assert_eq!(out.payment(BuyerId(1)), int(-5));
        assert_eq!(out.revenue(), int(3));
        assert_eq!(out.per_item_payments().unwrap()[1], vec![int(0), int(8)]);
    }

    #[test]
    fn path_worst_case_revenue() {
        let c = 9;
        for alpha in [frac(1, 4), frac(1, 2), frac(3, 4)] {
            let (out, cls) = alpha_apg(&chain(&[0, 0, 0, 0, c]), alpha).unwrap();
            assert_eq!(cls.winner, Some(BuyerId(5)));
            assert_eq!(cls.group(BuyerId(5)), Some(Group::Group3));
            assert_eq!(out.payment(BuyerId(5)), int(0));
            for i in 1..=4 {
                assert_eq!(out.payment(BuyerId(i)), -alpha * int(c));
            }
            assert_eq!(out.revenue(), -int(4) * alpha * int(c));
        }
    }

    #[test]
    fn group_one_when_far_rival_dominates() {
        // 1 → 2 → 3: buyer 2 wins as the first candidate; buyer 3 holds the
        // top report, so the winner is classified by the far maximum.
        let (out, cls) = alpha_apg(&chain(&[1, 6, 10]), frac(1, 2)).unwrap();
        assert_eq!(cls.winner, Some(BuyerId(2)));
        assert_eq!(cls.group(BuyerId(2)), Some(Group::Group1));
        assert_eq!(out.payment(BuyerId(2)), int(1));
        assert_eq!(out.payment(BuyerId(1)), int(-5));
    }

    #[test]
    fn boundary_tie_goes_to_group_three() {
        // close max 2 equals alpha * far max (1/2 * 4), winner holds top 8.
        let (out, cls) = alpha_apg(&chain(&[2, 8, 4]), frac(1, 2)).unwrap();
        assert_eq!(cls.winner, Some(BuyerId(2)));
        assert_eq!(cls.group(BuyerId(2)), Some(Group::Group3));
        assert_eq!(out.payment(BuyerId(2)), int(4));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(alpha_apg(&chain(&[1]), int(1)), Err(MechanismError::InvalidAlpha(_))));
        assert!(matches!(alpha_apg(&chain(&[1]), int(0)), Err(MechanismError::InvalidAlpha(_))));
        let two_items = AuctionInstance::new(2, [BuyerId(1)], vec![BuyerType::unit(int(1), [])]).unwrap();
        assert_eq!(alpha_apg(&two_items, frac(1, 2)).unwrap_err(), MechanismError::RequiresSingleItem(2));
        let nobody = AuctionInstance::new(1, [], vec![BuyerType::unit(int(1), [])]).unwrap();
        assert_eq!(alpha_apg(&nobody, frac(1, 2)).unwrap_err(), MechanismError::NoInformedBuyers);
    }

    #[test]
    fn uninformed_buyers_are_ignored() {
        // Buyer 3 is unreachable and declares a huge value.
        let buyers = vec![
            BuyerType::unit(int(3), [BuyerId(2)]),
            BuyerType::unit(int(2), []),
            BuyerType::unit(int(100), [BuyerId(1)]),
        ];
        let inst = AuctionInstance::new(1, [BuyerId(1)], buyers).unwrap();
        let (out, cls) = alpha_apg(&inst, frac(1, 2)).unwrap();
        assert_eq!(cls.winner, Some(BuyerId(1)));
        assert_eq!(cls.group(BuyerId(3)), None);
        assert_eq!(out.items(BuyerId(3)), 0);
        assert_eq!(out.payment(BuyerId(3)), int(0));
    }
}
