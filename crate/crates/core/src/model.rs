//! Buyers, declared types, auction instances and mechanism outcomes.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;

use crate::value::{format_value, Value};

/// A buyer identifier. Ids are `1..=n` without gaps; smaller ids are
/// "younger" and win ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BuyerId(pub u32);

impl BuyerId {
    /// Zero-based slot of this buyer in per-buyer vectors.
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(idx: usize) -> Self {
        BuyerId(idx as u32 + 1)
    }
}

impl fmt::Display for BuyerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("item count k must be positive")]
    ZeroItems,
    #[error("buyer {buyer}: valuations must be non-negative")]
    NegativeValuation { buyer: BuyerId },
    #[error("buyer {buyer}: valuations must be non-increasing (decreasing marginal utility)")]
    IncreasingValuations { buyer: BuyerId },
    #[error("buyer {buyer}: {len} valuations given but only k = {k} items exist")]
    TooManyValuations { buyer: BuyerId, len: usize, k: usize },
    #[error("buyer {buyer}: valuation {value} exceeds the cap {cap}")]
    AboveCap { buyer: BuyerId, value: String, cap: String },
    #[error("value cap must be non-negative")]
    NegativeCap,
    #[error("{owner}: neighbor {neighbor} is not a buyer id in 1..={n}")]
    UnknownNeighbor { owner: String, neighbor: BuyerId, n: usize },
    #[error("buyer {buyer} lists itself as a neighbor")]
    SelfLoop { buyer: BuyerId },
    #[error("buyer {buyer} declares neighbor {neighbor}, which is not a true neighbor")]
    DeclaredNotTrueNeighbor { buyer: BuyerId, neighbor: BuyerId },
    #[error("true profile has {got} buyers, declared profile has {expected}")]
    ProfileLengthMismatch { expected: usize, got: usize },
    #[error("no buyer with id {0}")]
    UnknownBuyer(BuyerId),
}

/// A (true or declared) type: marginal valuations and the neighbor set the
/// buyer forwards the auction to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BuyerType {
    pub valuations: Vec<Value>,
    pub neighbors: BTreeSet<BuyerId>,
}

impl BuyerType {
    pub fn new(valuations: Vec<Value>, neighbors: impl IntoIterator<Item = BuyerId>) -> Self {
        BuyerType { valuations, neighbors: neighbors.into_iter().collect() }
    }

    /// A unit-demand type: one positive marginal, the rest implicit zeros.
    pub fn unit(value: Value, neighbors: impl IntoIterator<Item = BuyerId>) -> Self {
        BuyerType::new(vec![value], neighbors)
    }

    /// Marginal value of the `l`-th item (1-based); zero past the end.
    pub fn marginal(&self, l: usize) -> Value {
        self.valuations.get(l - 1).copied().unwrap_or_else(Value::zero)
    }

    /// Total value of receiving `items` items.
    pub fn value_of(&self, items: usize) -> Value {
        self.valuations.iter().take(items).copied().sum()
    }

    /// Sum of the first `count` marginals.
    pub fn prefix_sum(&self, count: usize) -> Value {
        self.value_of(count)
    }

    fn validate(&self, owner: BuyerId, n: usize, k: usize, cap: Option<&Value>) -> Result<(), ModelError> {
        if self.valuations.len() > k {
            return Err(ModelError::TooManyValuations { buyer: owner, len: self.valuations.len(), k });
        }
        for (idx, v) in self.valuations.iter().enumerate() {
            if *v < Value::zero() {
                return Err(ModelError::NegativeValuation { buyer: owner });
            }
            if idx > 0 && *v > self.valuations[idx - 1] {
                return Err(ModelError::IncreasingValuations { buyer: owner });
            }
            if let Some(cap) = cap {
                if v > cap {
                    return Err(ModelError::AboveCap { buyer: owner, value: format_value(v), cap: format_value(cap) });
                }
            }
        }
        for &nb in &self.neighbors {
            if nb == owner {
                return Err(ModelError::SelfLoop { buyer: owner });
            }
            check_id(nb, n, || format!("buyer {owner}"))?;
        }
        Ok(())
    }

    fn padded(mut self, k: usize) -> Self {
        self.valuations.resize(k, Value::zero());
        self
    }
}

fn check_id(id: BuyerId, n: usize, owner: impl Fn() -> String) -> Result<(), ModelError> {
    if id.0 == 0 || id.0 as usize > n {
        return Err(ModelError::UnknownNeighbor { owner: owner(), neighbor: id, n });
    }
    Ok(())
}

/// One auction: the seller's neighbors, every buyer's declared type, the
/// item count and an optional valuation cap. In audit contexts a true
/// profile is attached as well.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionInstance {
    k: usize,
    value_cap: Option<Value>,
    seller_neighbors: BTreeSet<BuyerId>,
    declared: Vec<BuyerType>,
    truth: Option<Vec<BuyerType>>,
    labels: Vec<Option<String>>,
}

impl AuctionInstance {
    /// Builds an instance from declared types listed in id order (the
    /// `i`-th entry belongs to buyer `i + 1`). Valuation vectors shorter
    /// than `k` are zero-padded.
    pub fn new(
        k: usize,
        seller_neighbors: impl IntoIterator<Item = BuyerId>,
        declared: Vec<BuyerType>,
    ) -> Result<Self, ModelError> {
        if k == 0 {
            return Err(ModelError::ZeroItems);
        }
        let n = declared.len();
        let seller_neighbors: BTreeSet<BuyerId> = seller_neighbors.into_iter().collect();
        for &nb in &seller_neighbors {
            check_id(nb, n, || "seller".to_string())?;
        }
        for (idx, t) in declared.iter().enumerate() {
            t.validate(BuyerId::from_index(idx), n, k, None)?;
        }
        Ok(AuctionInstance {
            k,
            value_cap: None,
            seller_neighbors,
            declared: declared.into_iter().map(|t| t.padded(k)).collect(),
            truth: None,
            labels: vec![None; n],
        })
    }

    /// Attaches the valuation cap `v*`; every declared and true valuation
    /// must respect it.
    pub fn with_value_cap(mut self, cap: Value) -> Result<Self, ModelError> {
        if cap < Value::zero() {
            return Err(ModelError::NegativeCap);
        }
        let n = self.n();
        for profile in std::iter::once(&self.declared).chain(self.truth.as_ref()) {
            for (idx, t) in profile.iter().enumerate() {
                t.validate(BuyerId::from_index(idx), n, self.k, Some(&cap))?;
            }
        }
        self.value_cap = Some(cap);
        Ok(self)
    }

    /// Attaches the true profile. Declared neighbor sets must be subsets of
    /// the true ones.
    pub fn with_truth(mut self, truth: Vec<BuyerType>) -> Result<Self, ModelError> {
        let n = self.n();
        if truth.len() != n {
            return Err(ModelError::ProfileLengthMismatch { expected: n, got: truth.len() });
        }
        for (idx, t) in truth.iter().enumerate() {
            let id = BuyerId::from_index(idx);
            t.validate(id, n, self.k, self.value_cap.as_ref())?;
            if let Some(&extra) = self.declared[idx].neighbors.difference(&t.neighbors).next() {
                return Err(ModelError::DeclaredNotTrueNeighbor { buyer: id, neighbor: extra });
            }
        }
        let k = self.k;
        self.truth = Some(truth.into_iter().map(|t| t.padded(k)).collect());
        Ok(self)
    }

    /// Human-readable names for buyers (used in traces), in id order.
    pub fn with_labels(mut self, labels: Vec<Option<String>>) -> Self {
        self.labels = labels;
        self.labels.resize(self.declared.len(), None);
        self
    }

    pub fn n(&self) -> usize {
        self.declared.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn value_cap(&self) -> Option<Value> {
        self.value_cap
    }

    pub fn seller_neighbors(&self) -> &BTreeSet<BuyerId> {
        &self.seller_neighbors
    }

    pub fn buyer_ids(&self) -> impl Iterator<Item = BuyerId> + Clone {
        (1..=self.n() as u32).map(BuyerId)
    }

    pub fn contains(&self, id: BuyerId) -> bool {
        id.0 >= 1 && id.index() < self.n()
    }

    /// The declared type of `id`. Panics on an unknown id.
    pub fn declared(&self, id: BuyerId) -> &BuyerType {
        &self.declared[id.index()]
    }

    pub fn declared_profile(&self) -> &[BuyerType] {
        &self.declared
    }

    /// The true type of `id`: the attached true profile, or the declaration
    /// when none is attached.
    pub fn true_type(&self, id: BuyerId) -> &BuyerType {
        match &self.truth {
            Some(truth) => &truth[id.index()],
            None => &self.declared[id.index()],
        }
    }

    pub fn true_profile(&self) -> Option<&[BuyerType]> {
        self.truth.as_deref()
    }

    pub fn has_truth(&self) -> bool {
        self.truth.is_some()
    }

    pub fn label(&self, id: BuyerId) -> Option<&str> {
        self.labels.get(id.index()).and_then(|l| l.as_deref())
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    /// Label if present, otherwise the numeric id.
    pub fn display_name(&self, id: BuyerId) -> String {
        self.label(id).map_or_else(|| id.to_string(), str::to_string)
    }

    /// The same instance with `id`'s declaration replaced by `report`.
    /// The report must be a legal declaration: valuations within the cap,
    /// and (when a true profile is attached) neighbors within the true ones.
    pub fn with_report(&self, id: BuyerId, report: BuyerType) -> Result<Self, ModelError> {
        if !self.contains(id) {
            return Err(ModelError::UnknownBuyer(id));
        }
        report.validate(id, self.n(), self.k, self.value_cap.as_ref())?;
        if let Some(truth) = &self.truth {
            if let Some(&extra) = report.neighbors.difference(&truth[id.index()].neighbors).next() {
                return Err(ModelError::DeclaredNotTrueNeighbor { buyer: id, neighbor: extra });
            }
        }
        let mut next = self.clone();
        next.declared[id.index()] = report.padded(self.k);
        Ok(next)
    }

    /// The profile in which every buyer declares truthfully.
    pub fn truthful(&self) -> Self {
        let mut next = self.clone();
        if let Some(truth) = &self.truth {
            next.declared = truth.clone();
        }
        next
    }
}

/// Result of running a mechanism. `net_payment` is money paid by the buyer
/// to the seller: negative values are subsidies, and a buyer who gets no
/// item has utility `-net_payment`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    allocation: Vec<usize>,
    net_payment: Vec<Value>,
    per_item_payments: Option<Vec<Vec<Value>>>,
}

impl Outcome {
    /// Nobody gets anything and nobody pays.
    pub fn empty(n: usize) -> Self {
        Outcome { allocation: vec![0; n], net_payment: vec![Value::zero(); n], per_item_payments: None }
    }

    /// Builds an outcome from per-buyer item counts and net payments, in id
    /// order.
    pub fn from_parts(allocation: Vec<usize>, net_payment: Vec<Value>) -> Result<Self, ModelError> {
        if allocation.len() != net_payment.len() {
            return Err(ModelError::ProfileLengthMismatch { expected: allocation.len(), got: net_payment.len() });
        }
        Ok(Outcome { allocation, net_payment, per_item_payments: None })
    }

    pub fn n(&self) -> usize {
        self.allocation.len()
    }

    pub fn items(&self, id: BuyerId) -> usize {
        self.allocation[id.index()]
    }

    pub fn payment(&self, id: BuyerId) -> Value {
        self.net_payment[id.index()]
    }

    pub fn allocation(&self) -> &[usize] {
        &self.allocation
    }

    pub fn net_payments(&self) -> &[Value] {
        &self.net_payment
    }

    /// `p_{i,0..=f_i}` per buyer when the mechanism prices item by item:
    /// slot 0 is the transfer to a buyer who gets nothing.
    pub fn per_item_payments(&self) -> Option<&[Vec<Value>]> {
        self.per_item_payments.as_deref()
    }

    pub fn total_items(&self) -> usize {
        self.allocation.iter().sum()
    }

    /// Seller revenue: the sum of all net payments.
    pub fn revenue(&self) -> Value {
        self.net_payment.iter().copied().sum()
    }

    pub fn winners(&self) -> impl Iterator<Item = BuyerId> + '_ {
        self.allocation.iter().enumerate().filter(|(_, &f)| f > 0).map(|(i, _)| BuyerId::from_index(i))
    }

    pub(crate) fn set(&mut self, id: BuyerId, items: usize, payment: Value) {
        self.allocation[id.index()] = items;
        self.net_payment[id.index()] = payment;
    }

    pub(crate) fn set_per_item(&mut self, slots: Vec<Vec<Value>>) {
        self.per_item_payments = Some(slots);
    }
}
