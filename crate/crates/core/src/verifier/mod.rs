//! Brute-force incentive auditing.
//!
//! Every mechanism here is piecewise constant in one buyer's report, with
//! breakpoints at rival statistics (possibly rescaled). A finite grid around
//! those statistics therefore reaches every outcome region a buyer can
//! induce, and checking the grid together with every subset of true
//! neighbors certifies strategy-proofness on the instance.

use std::collections::BTreeSet;

use num_traits::Zero;
use rayon::prelude::*;

use crate::graph::diffusion_distances;
use crate::mechanisms::{Demand, Mechanism, MechanismError};
use crate::model::{AuctionInstance, BuyerId, BuyerType, ModelError, Outcome};
use crate::value::{frac, Value};

mod cut;
mod generate;

pub use cut::{
    check_cut_narrative, cut_instance, reconstruct_gidm_counterexample, search_gidm_counterexamples, CutNarrative,
    CUT_LABELS, CUT_VALUES,
};
pub use generate::{gen_corpus, gen_instance, GenParams, Topology, ValueDistribution};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifierError {
    #[error("buyer {buyer} has {count} true neighbors; at most {cap} subsets can be enumerated")]
    TooManyNeighbors { buyer: BuyerId, count: usize, cap: usize },
    #[error("unknown buyer {0}")]
    UnknownBuyer(BuyerId),
    #[error("mechanism failed on deviation {deviation:?}: {source}")]
    Mechanism { deviation: Box<Deviation>, source: MechanismError },
    #[error("mechanism failed on the truthful profile: {0}")]
    Truthful(MechanismError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unknown topology `{0}` (expected path, star, random-tree or random-graph)")]
    UnknownTopology(String),
    #[error("unknown value distribution `{0}` (expected uniform, unit or zero)")]
    UnknownDistribution(String),
    #[error("instance generation needs n >= 1 and k >= 1")]
    EmptyGeneration,
    #[error("counterexample narrative broken: {0}")]
    Narrative(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifierConfig {
    /// Offset placed on either side of every breakpoint.
    pub epsilon: Value,
    /// Largest true neighbor set whose subsets are enumerated.
    pub max_neighbors: usize,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig { epsilon: frac(1, 1000), max_neighbors: 12 }
    }
}

/// A report `(v'_i, R'_i)` with `R'_i` inside the true neighbor set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deviation {
    pub buyer: BuyerId,
    pub reported_valuations: Vec<Value>,
    pub reported_neighbors: BTreeSet<BuyerId>,
}

impl Deviation {
    pub fn report(&self) -> BuyerType {
        BuyerType::new(self.reported_valuations.clone(), self.reported_neighbors.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationReport {
    pub buyer: BuyerId,
    pub deviation: Deviation,
    pub truthful_utility: Value,
    pub deviant_utility: Value,
    /// `deviant_utility - truthful_utility`, strictly positive.
    pub gain: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpAudit {
    pub deviations_evaluated: usize,
    pub violation: Option<DeviationReport>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrViolation {
    pub buyer: BuyerId,
    pub utility: Value,
}

/// Utility of a buyer with true type `truth` in `outcome`.
fn utility_of(truth: &BuyerType, id: BuyerId, outcome: &Outcome) -> Value {
    truth.value_of(outcome.items(id)) - outcome.payment(id)
}

/// The profile where `id` reports truthfully and everyone else keeps their
/// declaration.
fn truthful_for(instance: &AuctionInstance, id: BuyerId) -> Result<AuctionInstance, ModelError> {
    instance.with_report(id, instance.true_type(id).clone())
}

/// Rival statistics a buyer's report is compared against.
fn rival_statistics(instance: &AuctionInstance, buyer: BuyerId, demand: Demand) -> Vec<Value> {
    let dist = diffusion_distances(instance);
    instance
        .buyer_ids()
        .filter(|&j| j != buyer && dist[j.index()].is_some())
        .map(|j| match demand {
            Demand::Unit => instance.declared(j).marginal(1),
            Demand::Prefix(nk) => instance.declared(j).prefix_sum(nk),
        })
        .collect()
}

/// Candidate values for the first reported coordinate, ascending.
fn first_coordinate_grid<M: Mechanism>(
    mechanism: &M,
    instance: &AuctionInstance,
    buyer: BuyerId,
    config: &VerifierConfig,
) -> Vec<Value> {
    let demand = mechanism.demand(instance);
    let stats = rival_statistics(instance, buyer, demand);
    let mut scales = vec![Value::from_integer(1)];
    scales.extend(mechanism.threshold_scales());
    if let Demand::Prefix(nk) = demand {
        // A flat report hits a sum statistic when each coordinate is s / j.
        scales.extend((2..=nk).map(|j| frac(1, j as i64)));
    }
    let truth = instance.true_type(buyer).marginal(1);
    let top = stats.iter().copied().chain([truth]).max().unwrap_or_else(Value::zero);
    let cap = instance.value_cap().unwrap_or(top * Value::from_integer(2) + Value::from_integer(1));

    let mut grid = BTreeSet::new();
    grid.insert(Value::zero());
    grid.insert(cap);
    for s in &stats {
        for scale in &scales {
            let point = *s * *scale;
            grid.insert(point);
            grid.insert(point + config.epsilon);
            grid.insert(point - config.epsilon);
        }
    }
    grid.into_iter().filter(|v| *v >= Value::zero() && *v <= cap).collect()
}

/// Valuation vectors to try, truthful first.
fn valuation_grid<M: Mechanism>(
    mechanism: &M,
    instance: &AuctionInstance,
    buyer: BuyerId,
    config: &VerifierConfig,
) -> Vec<Vec<Value>> {
    let k = instance.k();
    let truth = instance.true_type(buyer).valuations.clone();
    let firsts = first_coordinate_grid(mechanism, instance, buyer, config);
    let (prefix, flat_tails) = match mechanism.demand(instance) {
        Demand::Unit => (1, false),
        Demand::Prefix(nk) => (nk.clamp(1, k), true),
    };

    let mut vectors: Vec<Vec<Value>> = Vec::new();
    for x in firsts {
        let mut partial = vec![vec![x]];
        for &true_value in &truth[1..prefix] {
            let mut next = Vec::new();
            for p in &partial {
                let prev = *p.last().expect("partial vectors are nonempty");
                let options: BTreeSet<Value> =
                    [Value::zero(), true_value, prev].into_iter().filter(|v| *v <= prev).collect();
                for o in options {
                    let mut q = p.clone();
                    q.push(o);
                    next.push(q);
                }
            }
            partial = next;
        }
        for p in partial {
            let last = *p.last().expect("partial vectors are nonempty");
            let mut zero_tail = p.clone();
            zero_tail.resize(k, Value::zero());
            let mut flat_tail = p;
            flat_tail.resize(k, last);
            if flat_tails && flat_tail != zero_tail {
                vectors.push(flat_tail);
            }
            vectors.push(zero_tail);
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = vec![truth.clone()];
    seen.insert(truth);
    for v in vectors {
        if seen.insert(v.clone()) {
            out.push(v);
        }
    }
    out
}

/// The finite deviation basis for `buyer`: every subset of true neighbors
/// (by increasing bitmask over the sorted neighbor list) crossed with the
/// valuation grid (truthful vector first). The truthful report itself is
/// excluded.
pub fn deviation_set<M: Mechanism>(
    mechanism: &M,
    instance: &AuctionInstance,
    buyer: BuyerId,
    config: &VerifierConfig,
) -> Result<Vec<Deviation>, VerifierError> {
    if !instance.contains(buyer) {
        return Err(VerifierError::UnknownBuyer(buyer));
    }
    let truth = instance.true_type(buyer);
    let neighbors: Vec<BuyerId> = truth.neighbors.iter().copied().collect();
    if neighbors.len() > config.max_neighbors {
        return Err(VerifierError::TooManyNeighbors { buyer, count: neighbors.len(), cap: config.max_neighbors });
    }
    let base = truthful_for(instance, buyer)?;
    let valuations = valuation_grid(mechanism, &base, buyer, config);
    let mut out = Vec::with_capacity(valuations.len() << neighbors.len());
    for mask in 0u32..(1 << neighbors.len()) {
        let subset: BTreeSet<BuyerId> =
            neighbors.iter().enumerate().filter(|(bit, _)| mask & (1 << bit) != 0).map(|(_, &id)| id).collect();
        for v in &valuations {
            if subset == truth.neighbors && *v == truth.valuations {
                continue;
            }
            out.push(Deviation { buyer, reported_valuations: v.clone(), reported_neighbors: subset.clone() });
        }
    }
    Ok(out)
}

/// Evaluates one deviation against the profile where everyone else keeps
/// their declaration. Returns the deviant utility.
pub fn deviant_utility<M: Mechanism>(
    mechanism: &M,
    instance: &AuctionInstance,
    deviation: &Deviation,
) -> Result<Value, VerifierError> {
    let truth = instance.true_type(deviation.buyer);
    let profile = instance.with_report(deviation.buyer, deviation.report())?;
    let out = mechanism
        .run(&profile)
        .map_err(|source| VerifierError::Mechanism { deviation: Box::new(deviation.clone()), source })?;
    Ok(utility_of(truth, deviation.buyer, &out))
}

/// Utility of `buyer` when it reports truthfully and everyone else keeps
/// their declaration.
pub fn truthful_utility<M: Mechanism>(
    mechanism: &M,
    instance: &AuctionInstance,
    buyer: BuyerId,
) -> Result<Value, VerifierError> {
    let base = truthful_for(instance, buyer)?;
    let out = mechanism.run(&base).map_err(VerifierError::Truthful)?;
    Ok(utility_of(instance.true_type(buyer), buyer, &out))
}

/// Looks for a strictly profitable deviation, buyer by buyer in id order.
/// The reported violation is the first by (buyer id, deviation index),
/// whatever the thread schedule.
pub fn check_strategy_proof<M: Mechanism>(
    mechanism: &M,
    instance: &AuctionInstance,
    config: &VerifierConfig,
) -> Result<SpAudit, VerifierError> {
    let mut evaluated = 0;
    for buyer in instance.buyer_ids() {
        let base = truthful_for(instance, buyer)?;
        // A buyer nobody informs gets nothing whatever it reports.
        if diffusion_distances(&base)[buyer.index()].is_none() {
            continue;
        }
        let truthful = truthful_utility(mechanism, instance, buyer)?;
        let deviations = deviation_set(mechanism, instance, buyer, config)?;
        let found = deviations.par_iter().enumerate().find_map_first(|(idx, dev)| {
            match deviant_utility(mechanism, instance, dev) {
                Err(e) => Some(Err(e)),
                Ok(u) if u > truthful => Some(Ok((idx, u))),
                Ok(_) => None,
            }
        });
        match found {
            None => evaluated += deviations.len(),
            Some(Err(e)) => return Err(e),
            Some(Ok((idx, u))) => {
                let deviation = deviations[idx].clone();
                return Ok(SpAudit {
                    deviations_evaluated: evaluated + idx + 1,
                    violation: Some(DeviationReport {
                        buyer,
                        deviation,
                        truthful_utility: truthful,
                        deviant_utility: u,
                        gain: u - truthful,
                    }),
                });
            }
        }
    }
    Ok(SpAudit { deviations_evaluated: evaluated, violation: None })
}

/// Checks that truthful participation yields non-negative utility for
/// every buyer, with rivals held at their declarations.
pub fn check_ir<M: Mechanism>(mechanism: &M, instance: &AuctionInstance) -> Result<Option<IrViolation>, VerifierError> {
    for buyer in instance.buyer_ids() {
        let u = truthful_utility(mechanism, instance, buyer)?;
        if u < Value::zero() {
            return Ok(Some(IrViolation { buyer, utility: u }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{AlphaApg, Gapg};
    use crate::value::int;

    /// Buyer 1 wins and pays the cap no matter what: violates IR whenever it wins
    /// with a lower value.
    struct Gouge;

    impl Mechanism for Gouge {
        fn name(&self) -> String {
            "gouge".into()
        }
        fn run(&self, instance: &AuctionInstance) -> Result<Outcome, MechanismError> {
            let mut out = Outcome::empty(instance.n());
            let cap = instance.value_cap().unwrap_or_else(|| int(100));
            out.set(BuyerId(1), 1, cap);
            Ok(out)
        }
        fn demand(&self, _: &AuctionInstance) -> Demand {
            Demand::Unit
        }
    }

    fn rivals_instance() -> AuctionInstance {
        // Buyer 1 sees rivals 2 and 3 with values 4 and 10.
        let buyers = vec![
            BuyerType::unit(int(6), [BuyerId(2), BuyerId(3)]),
            BuyerType::unit(int(4), []),
            BuyerType::unit(int(10), []),
        ];
        let inst = AuctionInstance::new(1, [BuyerId(1)], buyers.clone()).unwrap();
        inst.with_value_cap(int(12)).unwrap().with_truth(buyers).unwrap()
    }

    #[test]
    fn grid_contains_scaled_breakpoints() {
        let inst = rivals_instance();
        let mech = AlphaApg::new(frac(1, 2)).unwrap();
        let grid = first_coordinate_grid(&mech, &inst, BuyerId(1), &VerifierConfig::default());
        let eps = frac(1, 1000);
        for p in [int(0), int(4), int(10), int(2), int(5), int(8), int(12)] {
            assert!(grid.contains(&p), "missing {p}");
        }
        for p in [int(4), int(10), int(2), int(5)] {
            assert!(grid.contains(&(p + eps)) && grid.contains(&(p - eps)));
        }
        // 20 = 10 / alpha is above the cap.
        assert!(!grid.contains(&int(20)));
        assert!(grid.windows(2).all(|w| w[0] < w[1]));

        let devs = deviation_set(&mech, &inst, BuyerId(1), &VerifierConfig::default()).unwrap();
        let subsets: BTreeSet<_> = devs.iter().map(|d| d.reported_neighbors.clone()).collect();
        assert_eq!(subsets.len(), 4);
        assert_eq!(devs[0].reported_neighbors, BTreeSet::new());
        assert_eq!(devs[0].reported_valuations, vec![int(6)]);
    }

    #[test]
    fn isolated_buyer_only_varies_valuation() {
        let buyers = vec![BuyerType::unit(int(3), []), BuyerType::unit(int(0), [])];
        let inst = AuctionInstance::new(1, [BuyerId(1), BuyerId(2)], buyers).unwrap().with_value_cap(int(5)).unwrap();
        let mech = AlphaApg::new(frac(1, 2)).unwrap();
        let devs = deviation_set(&mech, &inst, BuyerId(1), &VerifierConfig::default()).unwrap();
        assert!(devs.iter().all(|d| d.reported_neighbors.is_empty()));
        let values: BTreeSet<Value> = devs.iter().map(|d| d.reported_valuations[0]).collect();
        assert!(values.contains(&int(0)) && values.contains(&int(5)));
    }

    #[test]
    fn multi_item_tail_is_zero_or_flat() {
        let buyers = vec![
            BuyerType::new(vec![int(5), int(3), int(1), int(0)], [BuyerId(2)]),
            BuyerType::new(vec![int(4), int(4)], []),
        ];
        let inst = AuctionInstance::new(4, [BuyerId(1)], buyers).unwrap().with_value_cap(int(9)).unwrap();
        let devs = deviation_set(&Gapg, &inst, BuyerId(1), &VerifierConfig::default()).unwrap();
        for d in &devs {
            let v = &d.reported_valuations;
            assert_eq!(v.len(), 4);
            assert!(v.windows(2).all(|w| w[0] >= w[1]));
            if v != &[int(5), int(3), int(1), int(0)] {
                assert!(v[2] == int(0) || v[2] == v[1]);
                assert_eq!(v[3], v[2]);
            }
        }
    }

    #[test]
    fn neighbor_cap_is_enforced() {
        let n = 14;
        let mut buyers = vec![BuyerType::unit(int(1), (2..=n).map(BuyerId))];
        buyers.extend((2..=n).map(|_| BuyerType::unit(int(1), [])));
        let inst = AuctionInstance::new(1, [BuyerId(1)], buyers).unwrap();
        let mech = AlphaApg::new(frac(1, 2)).unwrap();
        let err = deviation_set(&mech, &inst, BuyerId(1), &VerifierConfig::default()).unwrap_err();
        assert_eq!(err, VerifierError::TooManyNeighbors { buyer: BuyerId(1), count: 13, cap: 12 });
    }

    #[test]
    fn broken_mechanism_fails_ir() {
        let inst = rivals_instance();
        let v = check_ir(&Gouge, &inst).unwrap().expect("gouging must be caught");
        assert_eq!(v.buyer, BuyerId(1));
        assert_eq!(v.utility, int(6) - int(12));
    }

    #[test]
    fn alpha_apg_survives_on_small_instance() {
        let inst = rivals_instance();
        let mech = AlphaApg::new(frac(1, 2)).unwrap();
        let audit = check_strategy_proof(&mech, &inst, &VerifierConfig::default()).unwrap();
        assert_eq!(audit.violation, None);
        assert!(audit.deviations_evaluated > 0);
        assert_eq!(check_ir(&mech, &inst).unwrap(), None);
    }
}
