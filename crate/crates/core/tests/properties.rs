use std::collections::BTreeSet;

use netauction::analysis::{optimal_welfare, utility, welfare_report};
use netauction::mechanisms::{gapg, nk_of, AlphaApg, Demand, GapgTopKUnit, GidmRevised, UnitPricing};
use netauction::verifier::{
    check_strategy_proof, deviant_utility, gen_instance, truthful_utility, GenParams, Topology, ValueDistribution,
    VerifierConfig,
};
use netauction::{
    build_apg, diffusion_distances, informed_set, AuctionInstance, BuyerId, BuyerType, Mechanism, MechanismError,
    Outcome, Value,
};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn topology() -> impl Strategy<Value = Topology> {
    prop::sample::select(Topology::ALL.to_vec())
}

fn instance(max_n: usize, ks: Vec<usize>, values: ValueDistribution) -> impl Strategy<Value = AuctionInstance> {
    (1..=max_n, prop::sample::select(ks), topology(), 1usize..=4, any::<u64>()).prop_map(
        move |(n, k, topology, degree, seed)| {
            let params = GenParams { values, max_out_degree: Some(degree), ..GenParams::new(n, k, topology, seed) };
            gen_instance(&params).unwrap()
        },
    )
}

fn alpha() -> impl Strategy<Value = Value> {
    prop::sample::select(vec![Value::new(1, 4), Value::new(1, 2), Value::new(3, 4), Value::new(2, 3)])
}

/// Drops the edges of `id` selected by `mask`.
fn cut(inst: &AuctionInstance, id: BuyerId, mask: u32) -> AuctionInstance {
    let mut t = inst.declared(id).clone();
    let kept: BTreeSet<BuyerId> =
        t.neighbors.iter().enumerate().filter(|(bit, _)| mask & (1 << bit) == 0).map(|(_, &j)| j).collect();
    t.neighbors = kept;
    inst.with_report(id, t).unwrap()
}

fn check_feasible(inst: &AuctionInstance, out: &Outcome) -> Result<(), TestCaseError> {
    let informed = informed_set(inst);
    prop_assert!(out.total_items() <= inst.k());
    for id in inst.buyer_ids() {
        if !informed.contains(&id) {
            prop_assert_eq!(out.items(id), 0);
            prop_assert_eq!(out.payment(id), Value::zero());
        }
    }
    Ok(())
}

proptest! {
    #[test]
    fn apg_is_deterministic_and_consistent(inst in instance(8, vec![1], ValueDistribution::Unit)) {
        let apg = build_apg(&inst);
        prop_assert_eq!(&apg, &build_apg(&inst.clone()));
        let dist = diffusion_distances(&inst);
        let order = apg.order();
        for (pos, &id) in order.iter().enumerate() {
            prop_assert_eq!(apg.position(id), Some(pos + 1));
            prop_assert_eq!(apg.bfs_distance(id), dist[id.index()]);
            prop_assert_eq!(apg.close(id).unwrap(), &order[..pos]);
            prop_assert_eq!(apg.far(id).unwrap(), &order[pos + 1..]);
        }
        for w in order.windows(2) {
            let (a, b) = (dist[w[0].index()].unwrap(), dist[w[1].index()].unwrap());
            prop_assert!(a < b || (a == b && w[0] < w[1]));
        }
    }

    #[test]
    fn cutting_edges_only_shrinks_the_informed_set(
        inst in instance(8, vec![1], ValueDistribution::Unit),
        who in 0usize..8,
        mask in any::<u32>(),
    ) {
        let id = BuyerId::from_index(who % inst.n());
        let before = informed_set(&inst);
        let after = informed_set(&cut(&inst, id, mask));
        prop_assert!(after.is_subset(&before));
        let dist_before = diffusion_distances(&inst);
        let dist_after = diffusion_distances(&cut(&inst, id, mask));
        for j in &after {
            prop_assert!(dist_after[j.index()] >= dist_before[j.index()]);
        }
    }

    #[test]
    fn every_mechanism_is_feasible(
        inst in instance(7, vec![1, 2, 3, 4], ValueDistribution::Uniform),
        a in alpha(),
    ) {
        check_feasible(&inst, &gapg(&inst).unwrap().0)?;
        for pricing in UnitPricing::ALL {
            check_feasible(&inst, &GapgTopKUnit::new(pricing).run(&inst).unwrap())?;
        }
        if inst.k() == 1 {
            check_feasible(&inst, &AlphaApg::new(a).unwrap().run(&inst).unwrap())?;
        }
    }

    #[test]
    fn gidm_is_feasible_on_trees(inst in instance(8, vec![1, 2, 3, 4], ValueDistribution::Unit)) {
        match GidmRevised.run(&inst) {
            Ok(out) => {
                check_feasible(&inst, &out)?;
                for id in out.winners() {
                    prop_assert!(out.payment(id) <= inst.declared(id).marginal(1));
                }
            }
            Err(MechanismError::NotATree(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }

    #[test]
    fn gapg_raising_a_loser_costs_the_threshold(inst in instance(6, vec![2, 4, 6, 9], ValueDistribution::Uniform)) {
        let (out, stats) = gapg(&inst).unwrap();
        let cap = inst.value_cap().unwrap();
        for id in informed_set(&inst) {
            if out.items(id) > 0 {
                continue;
            }
            let mut t = inst.declared(id).clone();
            t.valuations = vec![cap; inst.k()];
            let (raised, _) = gapg(&inst.with_report(id, t).unwrap()).unwrap();
            if raised.items(id) > 0 {
                prop_assert_eq!(raised.payment(id) - out.payment(id), stats.threshold);
            }
        }
    }

    #[test]
    fn ratios_respect_their_guarantees(
        inst in instance(7, vec![1, 2, 4, 6, 9], ValueDistribution::Uniform),
        a in alpha(),
    ) {
        let k = inst.k();
        let floor = Value::new(nk_of(k).unwrap() as i64, k as i64);
        let r = welfare_report(&inst, &gapg(&inst).unwrap().0).unwrap();
        prop_assert!(r.ratio >= floor && r.ratio <= Value::one());
        prop_assert!(r.achieved <= r.optimal);
        if k == 1 {
            let r = welfare_report(&inst, &AlphaApg::new(a).unwrap().run(&inst).unwrap()).unwrap();
            prop_assert!(r.ratio >= a && r.ratio <= Value::one());
        }
        let r = welfare_report(&inst, &GapgTopKUnit::default().run(&inst).unwrap()).unwrap();
        prop_assert!(r.ratio <= Value::one());
    }

    #[test]
    fn top_k_variant_is_efficient_under_unit_demand(inst in instance(7, vec![1, 2, 3, 5], ValueDistribution::Unit)) {
        let out = GapgTopKUnit::default().run(&inst).unwrap();
        let r = welfare_report(&inst, &out).unwrap();
        prop_assert_eq!(r.ratio, Value::one());
        prop_assert_eq!(r.achieved, optimal_welfare(&inst));
    }

    #[test]
    fn utilities_plus_revenue_is_welfare(
        inst in instance(7, vec![1, 2, 4], ValueDistribution::Uniform),
        a in alpha(),
    ) {
        let mut outs = vec![gapg(&inst).unwrap().0];
        if inst.k() == 1 {
            outs.push(AlphaApg::new(a).unwrap().run(&inst).unwrap());
        }
        for out in outs {
            let total: Value = inst.buyer_ids().map(|id| utility(&inst, id, &out)).sum();
            let r = welfare_report(&inst, &out).unwrap();
            prop_assert_eq!(total + out.revenue(), r.achieved);
        }
    }

    #[test]
    fn withholding_never_helps_apg_mechanisms(
        inst in instance(7, vec![1, 4, 9], ValueDistribution::Uniform),
        a in alpha(),
        who in 0usize..7,
        mask in any::<u32>(),
    ) {
        let id = BuyerId::from_index(who % inst.n());
        let cut_inst = cut(&inst, id, mask);
        let gapg_u = |i: &AuctionInstance| utility(&inst, id, &gapg(i).unwrap().0);
        prop_assert!(gapg_u(&cut_inst) <= gapg_u(&inst));
        if inst.k() == 1 {
            let mech = AlphaApg::new(a).unwrap();
            let u = |i: &AuctionInstance| utility(&inst, id, &mech.run(i).unwrap());
            prop_assert!(u(&cut_inst) <= u(&inst));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Whatever a report claims, re-running the deviation reproduces it.
    #[test]
    fn violation_reports_replay_exactly(inst in instance(6, vec![1, 2, 3], ValueDistribution::Unit)) {
        let cfg = VerifierConfig::default();
        let mechs: Vec<Box<dyn Mechanism>> = vec![
            Box::new(GidmRevised),
            Box::new(GapgTopKUnit::new(UnitPricing::MaxStatistic)),
        ];
        for mech in mechs {
            let audit = match check_strategy_proof(&mech, &inst, &cfg) {
                Ok(a) => a,
                Err(_) => continue,
            };
            if let Some(report) = audit.violation {
                let base = truthful_utility(&mech, &inst, report.buyer).unwrap();
                let dev = deviant_utility(&mech, &inst, &report.deviation).unwrap();
                prop_assert_eq!(base, report.truthful_utility);
                prop_assert_eq!(dev, report.deviant_utility);
                prop_assert_eq!(dev - base, report.gain);
                prop_assert!(report.gain > Value::zero());
                prop_assert!(report.deviation.reported_neighbors.is_subset(&inst.true_type(report.buyer).neighbors));
            }
        }
    }
}

/// Winner is the top report and pays half of its own report: shading pays
/// off at every value, so any search should find it.
struct HalfOwnBid;

impl Mechanism for HalfOwnBid {
    fn name(&self) -> String {
        "half-own-bid".into()
    }

    fn run(&self, inst: &AuctionInstance) -> Result<Outcome, MechanismError> {
        let informed = informed_set(inst);
        let winner = informed
            .iter()
            .copied()
            .max_by(|a, b| inst.declared(*a).marginal(1).cmp(&inst.declared(*b).marginal(1)).then(b.cmp(a)));
        let mut reports = vec![Value::zero(); inst.n()];
        let mut items = vec![0; inst.n()];
        if let Some(w) = winner {
            items[w.index()] = 1;
            reports[w.index()] = inst.declared(w).marginal(1) / Value::from_integer(2);
        }
        Ok(outcome_from(items, reports))
    }

    fn demand(&self, _: &AuctionInstance) -> Demand {
        Demand::Unit
    }
}

fn outcome_from(items: Vec<usize>, payments: Vec<Value>) -> Outcome {
    Outcome::from_parts(items, payments).unwrap()
}

/// Profitable unit-demand deviations for `buyer` found on a uniform mesh of
/// `steps + 1` points on `[0, cap]`, over every neighbor subset.
fn mesh_finds_violation<M: Mechanism>(mech: &M, inst: &AuctionInstance, buyer: BuyerId, steps: i64) -> bool {
    let cap = inst.value_cap().unwrap();
    let truth = inst.true_type(buyer).clone();
    let base = match truthful_utility(mech, inst, buyer) {
        Ok(u) => u,
        Err(_) => return false,
    };
    let neighbors: Vec<BuyerId> = truth.neighbors.iter().copied().collect();
    for mask in 0u32..(1 << neighbors.len()) {
        let subset: Vec<BuyerId> =
            neighbors.iter().enumerate().filter(|(b, _)| mask & (1 << b) != 0).map(|(_, &j)| j).collect();
        for step in 0..=steps {
            let v = cap * Value::new(step, steps);
            let report = BuyerType::unit(v, subset.iter().copied());
            let out = mech.run(&inst.with_report(buyer, report).unwrap()).unwrap();
            if truth.value_of(out.items(buyer)) - out.payment(buyer) > base {
                return true;
            }
        }
    }
    false
}

#[test]
fn grid_agrees_with_dense_mesh_on_small_markets() {
    // Breakpoints of these mechanisms lie on a 1/12 lattice for integer
    // values, so a 1/100 mesh over [0, 10] meets every outcome region.
    let mechs: Vec<Box<dyn Mechanism>> = vec![
        Box::new(AlphaApg::new(Value::new(1, 4)).unwrap()),
        Box::new(AlphaApg::new(Value::new(3, 4)).unwrap()),
        Box::new(GapgTopKUnit::new(UnitPricing::KthStatistic)),
        Box::new(GapgTopKUnit::new(UnitPricing::MaxStatistic)),
        Box::new(HalfOwnBid),
    ];
    let cfg = VerifierConfig::default();
    let mut disagreements = Vec::new();
    let mut violations_seen = 0;
    for seed in 0..40u64 {
        let n = 1 + (seed as usize % 3);
        let k = if seed % 2 == 0 { 1 } else { 2 };
        let params = GenParams {
            values: ValueDistribution::Unit,
            ..GenParams::new(n, k, Topology::ALL[seed as usize % 4], 70_000 + seed)
        };
        let inst = gen_instance(&params).unwrap();
        for mech in &mechs {
            if mech.name().starts_with("alpha") && k != 1 {
                continue;
            }
            for id in inst.buyer_ids() {
                let devs = netauction::verifier::deviation_set(mech, &inst, id, &cfg).unwrap();
                let base = truthful_utility(mech, &inst, id).unwrap();
                let grid = devs.iter().any(|d| deviant_utility(mech, &inst, d).unwrap() > base);
                let mesh = mesh_finds_violation(mech, &inst, id, 1000);
                violations_seen += usize::from(grid);
                if grid != mesh {
                    disagreements.push((seed, mech.name(), id, grid, mesh));
                }
            }
        }
    }
    assert!(disagreements.is_empty(), "{disagreements:?}");
    assert!(violations_seen > 0, "the broken mechanisms should be caught");
}
