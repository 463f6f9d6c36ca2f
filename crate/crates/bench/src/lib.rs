//! Fixed workloads for the benchmarks.

use netauction::verifier::{gen_instance, GenParams, Topology, ValueDistribution};
use netauction::AuctionInstance;

/// A deterministic instance; `Topology::RandomGraph` for APG-based
/// mechanisms, `Topology::RandomTree` for GIDM.
pub fn market(n: usize, k: usize, topology: Topology, values: ValueDistribution) -> AuctionInstance {
    let params = GenParams { values, max_out_degree: Some(3), ..GenParams::new(n, k, topology, 0x5eed) };
    gen_instance(&params).expect("benchmark parameters are valid")
}
