//! Revised Generalized Information Diffusion Mechanism on diffusion trees.
//!
//! Items flow down the tree from the seller. Every holder is offered one of
//! the items it holds at a price equal to the surplus the rest of the market
//! loses when the holder is served: with the allocations of earlier winners
//! and of planned winners outside the holder's subtree held fixed, the
//! `h`-th largest remaining value outside the subtree, where `h` is the
//! number of items the holder has.
//!
//! Holders on the same tree level are priced against the state at the start
//! of that level, then act in id order. A holder who is not one of the
//! planned top-`k` winners takes an item (displacing the lowest-ranked
//! planned winner below it) iff its value strictly exceeds the price. A
//! planned winner keeps its item iff the price does not exceed its value;
//! otherwise the item is discarded.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::{kth_largest, Demand, Mechanism, MechanismError};
use crate::graph::diffusion_distances;
use crate::model::{AuctionInstance, BuyerId, Outcome};
use crate::value::{format_value, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GidmEvent {
    /// `from = None` is the seller.
    Send { from: Option<BuyerId>, to: BuyerId, items: usize },
    /// A non-planned holder takes the item destined for `from`.
    TakeAway { buyer: BuyerId, from: BuyerId, price: Value },
    /// A non-planned holder passes on the offer and forwards everything.
    Decline { buyer: BuyerId, price: Value },
    /// A planned winner keeps its item.
    Keep { buyer: BuyerId, price: Value },
    /// A planned winner priced above its value; its item is discarded.
    Forfeit { buyer: BuyerId, price: Value },
}

impl GidmEvent {
    /// One-line description using the instance's buyer labels.
    pub fn describe(&self, instance: &AuctionInstance) -> String {
        let name = |id: &BuyerId| instance.display_name(*id);
        match self {
            GidmEvent::Send { from, to, items } => {
                let src = from.as_ref().map_or_else(|| "seller".to_string(), name);
                format!("{src} sends {items} item(s) to {}", name(to))
            }
            GidmEvent::TakeAway { buyer, from, price } => {
                format!("{} takes from {} at price {}", name(buyer), name(from), format_value(price))
            }
            GidmEvent::Decline { buyer, price } => {
                format!("{} declines at price {} and forwards", name(buyer), format_value(price))
            }
            GidmEvent::Keep { buyer, price } => {
                format!("{} keeps an item at price {}", name(buyer), format_value(price))
            }
            GidmEvent::Forfeit { buyer, price } => {
                format!("{} forfeits at price {}; one item is discarded", name(buyer), format_value(price))
            }
        }
    }

    /// Price quoted to the acting buyer, for decision events.
    pub fn quote(&self) -> Option<(BuyerId, Value)> {
        match self {
            GidmEvent::Send { .. } => None,
            GidmEvent::TakeAway { buyer, price, .. }
            | GidmEvent::Decline { buyer, price }
            | GidmEvent::Keep { buyer, price }
            | GidmEvent::Forfeit { buyer, price } => Some((*buyer, *price)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GidmTreeState {
    /// Tree parent of every informed buyer; `None` is the seller.
    pub parent: BTreeMap<BuyerId, Option<BuyerId>>,
    /// Items each buyer received from its parent.
    pub holdings: Vec<usize>,
    /// The top-`k` informed buyers the items were initially routed to.
    pub planned: BTreeSet<BuyerId>,
    /// Buyers whose item is final.
    pub fixed_allocations: BTreeSet<BuyerId>,
    pub discarded: usize,
    pub trace: Vec<GidmEvent>,
}

impl GidmTreeState {
    /// The price `id` was quoted, if it ever held an item.
    pub fn quoted_price(&self, id: BuyerId) -> Option<Value> {
        self.trace.iter().filter_map(GidmEvent::quote).find(|(b, _)| *b == id).map(|(_, p)| p)
    }

    pub fn items_sent(&self, from: Option<BuyerId>, to: BuyerId) -> usize {
        self.trace
            .iter()
            .find_map(|e| match e {
                GidmEvent::Send { from: f, to: t, items } if *f == from && *t == to => Some(*items),
                _ => None,
            })
            .unwrap_or(0)
    }

    pub fn took_from(&self, buyer: BuyerId) -> Option<BuyerId> {
        self.trace.iter().find_map(|e| match e {
            GidmEvent::TakeAway { buyer: b, from, .. } if *b == buyer => Some(*from),
            _ => None,
        })
    }
}

struct Tree {
    informed: Vec<BuyerId>,
    depth: Vec<Option<u32>>,
    parent: Vec<Option<Option<BuyerId>>>,
    seller_children: Vec<BuyerId>,
    children: Vec<Vec<BuyerId>>,
    /// `below[i][j]`: `j` is a strict descendant of `i`.
    below: Vec<Vec<bool>>,
}

impl Tree {
    fn build(instance: &AuctionInstance) -> Result<Self, MechanismError> {
        let n = instance.n();
        let depth = diffusion_distances(instance);
        let informed: Vec<BuyerId> = instance.buyer_ids().filter(|id| depth[id.index()].is_some()).collect();

        let mut parent: Vec<Option<Option<BuyerId>>> = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let seller_children: Vec<BuyerId> = instance.seller_neighbors().iter().copied().collect();
        for &c in &seller_children {
            parent[c.index()] = Some(None);
        }
        for &id in &informed {
            for &nb in &instance.declared(id).neighbors {
                if parent[nb.index()].is_some() {
                    return Err(MechanismError::NotATree(nb.0));
                }
                parent[nb.index()] = Some(Some(id));
                children[id.index()].push(nb);
            }
        }

        let mut below = vec![vec![false; n]; n];
        for &id in &informed {
            let mut cur = parent[id.index()].flatten();
            while let Some(anc) = cur {
                below[anc.index()][id.index()] = true;
                cur = parent[anc.index()].flatten();
            }
        }
        Ok(Tree { informed, depth, parent, seller_children, children, below })
    }

    /// Planned winners in the subtree rooted at `root`, root included.
    fn planned_in(&self, root: BuyerId, planned: &[bool]) -> usize {
        let r = root.index();
        usize::from(planned[r]) + self.below[r].iter().zip(planned).filter(|(b, p)| **b && **p).count()
    }
}

/// Runs revised GIDM on a tree-shaped declared diffusion graph with unit
/// demand.
pub fn gidm_revised(instance: &AuctionInstance) -> Result<(Outcome, GidmTreeState), MechanismError> {
    let k = instance.k();
    if k == 0 {
        return Err(MechanismError::ZeroItems);
    }
    let tree = Tree::build(instance)?;
    for &id in &tree.informed {
        if instance.declared(id).valuations.iter().skip(1).any(|v| !v.is_zero()) {
            return Err(MechanismError::MultiDemand(id.0));
        }
    }
    let n = instance.n();
    let value = |id: BuyerId| instance.declared(id).marginal(1);

    let mut ranked = tree.informed.clone();
    ranked.sort_by(|a, b| value(*b).cmp(&value(*a)).then(a.cmp(b)));
    let mut planned = vec![false; n];
    for id in ranked.iter().take(k) {
        planned[id.index()] = true;
    }
    let planned_set: BTreeSet<BuyerId> = ranked.iter().take(k).copied().collect();

    let mut trace = Vec::new();
    let mut holdings = vec![0usize; n];
    for &c in &tree.seller_children {
        let items = tree.planned_in(c, &planned);
        holdings[c.index()] = items;
        if items > 0 {
            trace.push(GidmEvent::Send { from: None, to: c, items });
        }
    }

    let mut winner = vec![false; n];
    let mut price_paid = vec![Value::zero(); n];
    let mut discarded = 0;
    let max_depth = tree.informed.iter().filter_map(|id| tree.depth[id.index()]).max().unwrap_or(0);

    for level in 1..=max_depth {
        let holders: Vec<BuyerId> = tree
            .informed
            .iter()
            .copied()
            .filter(|id| tree.depth[id.index()] == Some(level) && holdings[id.index()] > 0)
            .collect();
        if holders.is_empty() {
            continue;
        }
        // Quotes for this level see only decisions made on earlier levels.
        let quotes: Vec<Value> = holders
            .iter()
            .map(|&i| {
                let below = &tree.below[i.index()];
                let pool = tree.informed.iter().filter(|j| {
                    let jx = j.index();
                    **j != i && !below[jx] && !winner[jx] && !planned[jx]
                });
                kth_largest(pool.map(|&j| value(j)), holdings[i.index()])
            })
            .collect();

        for (&i, &price) in holders.iter().zip(&quotes) {
            let v = value(i);
            if planned[i.index()] {
                planned[i.index()] = false;
                if price <= v {
                    winner[i.index()] = true;
                    price_paid[i.index()] = price;
                    trace.push(GidmEvent::Keep { buyer: i, price });
                } else {
                    discarded += 1;
                    trace.push(GidmEvent::Forfeit { buyer: i, price });
                }
            } else if price < v {
                let victim = tree
                    .informed
                    .iter()
                    .copied()
                    .filter(|j| tree.below[i.index()][j.index()] && planned[j.index()])
                    .min_by(|a, b| value(*a).cmp(&value(*b)).then(b.cmp(a)))
                    .expect("a non-planned holder only holds items routed to planned winners below it");
                planned[victim.index()] = false;
                winner[i.index()] = true;
                price_paid[i.index()] = price;
                trace.push(GidmEvent::TakeAway { buyer: i, from: victim, price });
            } else {
                trace.push(GidmEvent::Decline { buyer: i, price });
            }

            for &c in &tree.children[i.index()] {
                let items = tree.planned_in(c, &planned);
                holdings[c.index()] = items;
                if items > 0 {
                    trace.push(GidmEvent::Send { from: Some(i), to: c, items });
                }
            }
        }
    }

    let mut outcome = Outcome::empty(n);
    let mut slots = vec![vec![Value::zero()]; n];
    let mut fixed = BTreeSet::new();
    for id in instance.buyer_ids() {
        if winner[id.index()] {
            outcome.set(id, 1, price_paid[id.index()]);
            slots[id.index()] = vec![Value::zero(), price_paid[id.index()]];
            fixed.insert(id);
        }
    }
    outcome.set_per_item(slots);

    let parent = tree.informed.iter().map(|&id| (id, tree.parent[id.index()].flatten())).collect();
    let state = GidmTreeState { parent, holdings, planned: planned_set, fixed_allocations: fixed, discarded, trace };
    Ok((outcome, state))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GidmRevised;

impl Mechanism for GidmRevised {
    fn name(&self) -> String {
        "gidm".to_string()
    }

    fn run(&self, instance: &AuctionInstance) -> Result<Outcome, MechanismError> {
        gidm_revised(instance).map(|(outcome, _)| outcome)
    }

    fn demand(&self, _instance: &AuctionInstance) -> Demand {
        Demand::Unit
    }
}
