use std::collections::BTreeSet;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::VerifierError;
use crate::model::{AuctionInstance, BuyerId, BuyerType};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    Path,
    Star,
    RandomTree,
    /// A random tree plus extra random edges (cycles and shortcuts).
    RandomGraph,
}

impl Topology {
    pub const ALL: [Topology; 4] = [Topology::Path, Topology::Star, Topology::RandomTree, Topology::RandomGraph];

    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Path => "path",
            Topology::Star => "star",
            Topology::RandomTree => "random-tree",
            Topology::RandomGraph => "random-graph",
        }
    }

    pub fn is_tree(self) -> bool {
        !matches!(self, Topology::RandomGraph)
    }
}

impl FromStr for Topology {
    type Err = VerifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topology::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| VerifierError::UnknownTopology(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueDistribution {
    /// Every marginal uniform on `0..=cap`, then sorted non-increasing.
    Uniform,
    /// First marginal uniform on `0..=cap`, the rest zero.
    Unit,
    Zero,
}

impl ValueDistribution {
    pub const ALL: [ValueDistribution; 3] =
        [ValueDistribution::Uniform, ValueDistribution::Unit, ValueDistribution::Zero];

    pub fn as_str(self) -> &'static str {
        match self {
            ValueDistribution::Uniform => "uniform",
            ValueDistribution::Unit => "unit",
            ValueDistribution::Zero => "zero",
        }
    }
}

impl FromStr for ValueDistribution {
    type Err = VerifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ValueDistribution::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| VerifierError::UnknownDistribution(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenParams {
    pub n: usize,
    pub k: usize,
    pub topology: Topology,
    pub values: ValueDistribution,
    /// Integer valuation cap `v*`; also attached to the instance.
    pub cap: i64,
    /// Upper bound on every out-degree, seller included.
    pub max_out_degree: Option<usize>,
    pub seed: u64,
}

impl GenParams {
    pub fn new(n: usize, k: usize, topology: Topology, seed: u64) -> Self {
        GenParams { n, k, topology, values: ValueDistribution::Uniform, cap: 10, max_out_degree: None, seed }
    }
}

/// Probability of each extra edge in a random graph.
const EXTRA_EDGE_PROB: f64 = 0.3;

/// Draws a truthful instance: declarations equal the attached truth, and
/// every buyer is reachable from the seller. Buyer ids are shuffled so that
/// graph position and id are independent.
pub fn gen_instance(params: &GenParams) -> Result<AuctionInstance, VerifierError> {
    let GenParams { n, k, topology, values, cap, max_out_degree, seed } = *params;
    if n == 0 || k == 0 {
        return Err(VerifierError::EmptyGeneration);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limit = max_out_degree.unwrap_or(usize::MAX).max(1);

    let mut order: Vec<BuyerId> = (1..=n as u32).map(BuyerId).collect();
    order.shuffle(&mut rng);

    // Index 0 is the seller; index j is order[j - 1].
    let mut out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n + 1];
    match topology {
        Topology::Path => {
            for j in 1..=n {
                out[j - 1].insert(j);
            }
        }
        Topology::Star => {
            // The seller respects the degree bound; overflow hangs off
            // earlier buyers in a balanced way.
            for j in 1..=n {
                let parent = if j <= limit { 0 } else { (j - 1) / limit };
                out[parent].insert(j);
            }
        }
        Topology::RandomTree | Topology::RandomGraph => {
            for j in 1..=n {
                let open: Vec<usize> = (0..j).filter(|&p| out[p].len() < limit).collect();
                let parent = *open.choose(&mut rng).expect("the newest node always has room");
                out[parent].insert(j);
            }
            if topology == Topology::RandomGraph {
                for (u, edges) in out.iter_mut().enumerate() {
                    for v in 1..=n {
                        if u != v && edges.len() < limit && !edges.contains(&v) && rng.gen_bool(EXTRA_EDGE_PROB) {
                            edges.insert(v);
                        }
                    }
                }
            }
        }
    }

    let id_of = |j: usize| order[j - 1];
    let seller: Vec<BuyerId> = out[0].iter().map(|&j| id_of(j)).collect();
    let mut buyers = vec![BuyerType::default(); n];
    for j in 1..=n {
        let mut vals: Vec<Value> = match values {
            ValueDistribution::Uniform => (0..k).map(|_| Value::from_integer(rng.gen_range(0..=cap))).collect(),
            ValueDistribution::Unit => {
                let mut v = vec![Value::from_integer(0); k];
                v[0] = Value::from_integer(rng.gen_range(0..=cap));
                v
            }
            ValueDistribution::Zero => vec![Value::from_integer(0); k],
        };
        vals.sort_unstable_by(|a, b| b.cmp(a));
        buyers[id_of(j).index()] = BuyerType::new(vals, out[j].iter().map(|&c| id_of(c)));
    }

    let inst = AuctionInstance::new(k, seller, buyers.clone())?
        .with_value_cap(Value::from_integer(cap))?
        .with_truth(buyers)?;
    Ok(inst)
}

/// `count` instances with seeds `seed, seed + 1, ...`.
pub fn gen_corpus(params: &GenParams, count: usize) -> Result<Vec<AuctionInstance>, VerifierError> {
    (0..count as u64)
        .map(|i| gen_instance(&GenParams { seed: params.seed.wrapping_add(i), ..params.clone() }))
        .collect()
}
