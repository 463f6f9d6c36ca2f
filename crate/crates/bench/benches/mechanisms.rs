use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use netauction::mechanisms::{AlphaApg, Gapg, GapgTopKUnit, GidmRevised, UnitPricing};
use netauction::verifier::{check_strategy_proof, Topology, ValueDistribution, VerifierConfig};
use netauction::{build_apg, Mechanism, Value};
use netauction_bench::market;

fn apg(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_apg");
    for n in [16, 128, 1024] {
        let inst = market(n, 1, Topology::RandomGraph, ValueDistribution::Unit);
        group.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| b.iter(|| build_apg(inst)));
    }
    group.finish();
}

fn mechanisms(c: &mut Criterion) {
    let alpha = AlphaApg::new(Value::new(1, 2)).unwrap();
    let topk = GapgTopKUnit::new(UnitPricing::KthStatistic);
    let mut group = c.benchmark_group("run");
    for n in [16, 128] {
        let single = market(n, 1, Topology::RandomGraph, ValueDistribution::Unit);
        let multi = market(n, 16, Topology::RandomGraph, ValueDistribution::Uniform);
        let unit = market(n, 8, Topology::RandomGraph, ValueDistribution::Unit);
        let tree = market(n, 8, Topology::RandomTree, ValueDistribution::Unit);
        group.bench_with_input(BenchmarkId::new("alpha_apg", n), &single, |b, i| b.iter(|| alpha.run(i).unwrap()));
        group.bench_with_input(BenchmarkId::new("gapg", n), &multi, |b, i| b.iter(|| Gapg.run(i).unwrap()));
        group.bench_with_input(BenchmarkId::new("gapg_topk", n), &unit, |b, i| b.iter(|| topk.run(i).unwrap()));
        group.bench_with_input(BenchmarkId::new("gidm", n), &tree, |b, i| b.iter(|| GidmRevised.run(i).unwrap()));
    }
    group.finish();
}

fn verifier(c: &mut Criterion) {
    let cfg = VerifierConfig::default();
    let alpha = AlphaApg::new(Value::new(1, 2)).unwrap();
    let single = market(8, 1, Topology::RandomGraph, ValueDistribution::Unit);
    let multi = market(6, 4, Topology::RandomGraph, ValueDistribution::Uniform);
    let mut group = c.benchmark_group("check_strategy_proof");
    group.sample_size(20);
    group.bench_function("alpha_apg/8", |b| b.iter(|| check_strategy_proof(&alpha, &single, &cfg).unwrap()));
    group.bench_function("gapg/6", |b| b.iter(|| check_strategy_proof(&Gapg, &multi, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, apg, mechanisms, verifier);
criterion_main!(benches);
