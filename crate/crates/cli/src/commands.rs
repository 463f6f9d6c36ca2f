use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{anyhow, Context};
use netauction::analysis::{empirical_beta, empirical_efficiency, utility, AnalysisError};
use netauction::mechanisms::{gidm_revised, AlphaApg, Gapg, GapgTopKUnit, GidmRevised, UnitPricing};
use netauction::verifier::{
    check_cut_narrative, check_ir, check_strategy_proof, gen_instance, reconstruct_gidm_counterexample,
    search_gidm_counterexamples, GenParams, Topology, ValueDistribution, VerifierConfig, VerifierError, CUT_LABELS,
};
use netauction::{format_value, parse_value, AuctionInstance, BuyerId, BuyerType, Mechanism, Value};
use serde::Serialize;

use crate::instance_file::{InstanceFile, LoadedInstance};
use crate::records::{exact, join, write_csv, RunRecord, SweepRecord, VerifyRecord};
use crate::{
    Cli, Command, CorpusArgs, CounterexampleArgs, Failure, GenArgs, MechanismArgs, MechanismName, Report, RunArgs,
    Scenario, SweepArgs, VerifyArgs,
};

type Outcome<T> = Result<T, Failure>;

fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

fn precondition(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Precondition(e.into())
}

/// Mechanism failures are precondition failures; a bad report built by the
/// auditor is an input problem.
fn from_verifier(e: VerifierError) -> Failure {
    match e {
        VerifierError::Mechanism { .. } | VerifierError::Truthful(_) => precondition(e),
        _ => input(e),
    }
}

pub fn execute(cli: Cli) -> Outcome<Report> {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Gen(args) => cmd_gen(&args),
        Command::Counterexample(args) => cmd_counterexample(&args),
    }
}

fn parse_alpha(text: &str) -> Outcome<Value> {
    parse_value(text).map_err(|e| input(anyhow!("--alpha `{text}`: {e}")))
}

fn build_mechanism(name: MechanismName, alpha: Option<Value>, pricing: UnitPricing) -> Outcome<Box<dyn Mechanism>> {
    Ok(match name {
        MechanismName::AlphaApg => {
            let alpha = alpha.unwrap_or_else(|| Value::new(1, 2));
            Box::new(AlphaApg::new(alpha).map_err(input)?)
        }
        MechanismName::Gapg => Box::new(Gapg),
        MechanismName::GapgTopk => Box::new(GapgTopKUnit::new(pricing)),
        MechanismName::Gidm => Box::new(GidmRevised),
    })
}

fn mechanism_for(args: &MechanismArgs, file_alpha: Option<Value>) -> Outcome<Box<dyn Mechanism>> {
    let alpha = args.alpha.as_deref().map(parse_alpha).transpose()?.or(file_alpha);
    build_mechanism(args.mechanism, alpha, args.pricing)
}

fn scenario_instance(scenario: Scenario) -> Outcome<AuctionInstance> {
    match scenario {
        Scenario::EdgeCut => reconstruct_gidm_counterexample().map_err(precondition),
    }
}

fn load(path: &Path) -> Outcome<LoadedInstance> {
    InstanceFile::read(path).and_then(|f| f.load()).map_err(|e| input(anyhow!("{}: {e}", path.display())))
}

fn write_csv_file<R: Serialize>(path: &Path, rows: &[R]) -> Outcome<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display())).map_err(input)?;
    write_csv(BufWriter::new(file), rows).with_context(|| format!("cannot write {}", path.display())).map_err(input)
}

fn run_mechanism(mech: &dyn Mechanism, inst: &AuctionInstance) -> Outcome<netauction::Outcome> {
    mech.run(inst).map_err(|e| precondition(anyhow!("{}: {e}", mech.name())))
}

fn cmd_run(args: &RunArgs) -> Outcome<Report> {
    let (loaded, instance_id) = match (&args.instance, args.scenario) {
        (_, Some(s)) => (LoadedInstance { instance: scenario_instance(s)?, alpha: None }, "edge-cut".to_string()),
        (Some(path), None) => (load(path)?, path.display().to_string()),
        (None, None) => return Err(input(anyhow!("an instance file or --scenario is required"))),
    };
    let inst = &loaded.instance;
    let mech = mechanism_for(&args.mech, loaded.alpha)?;
    let out = run_mechanism(&mech, inst)?;
    let record = RunRecord::new(mech.name(), instance_id, inst, &out).map_err(precondition)?;

    let mut text = String::new();
    let _ = writeln!(text, "mechanism  {}", record.mechanism);
    let _ = writeln!(text, "instance   {} (n = {}, k = {})", record.instance, record.n, record.k);
    let _ = writeln!(text, "{:<8} {:>5} {:>12} {:>12}", "buyer", "items", "net_payment", "utility");
    for id in inst.buyer_ids() {
        let _ = writeln!(
            text,
            "{:<8} {:>5} {:>12} {:>12}",
            inst.display_name(id),
            out.items(id),
            format_value(&out.payment(id)),
            format_value(&utility(inst, id, &out)),
        );
    }
    let _ = writeln!(text, "revenue    {}", record.revenue);
    let _ =
        writeln!(text, "welfare    {} of {} (ratio {})", record.achieved_welfare, record.optimal_welfare, record.ratio);
    if !record.normalized_revenue.is_empty() {
        let _ = writeln!(text, "normalized {}", record.normalized_revenue);
    }
    if args.mech.mechanism == MechanismName::Gidm {
        let (_, state) = gidm_revised(inst).map_err(precondition)?;
        let _ = writeln!(text, "trace");
        for event in &state.trace {
            let _ = writeln!(text, "  {}", event.describe(inst));
        }
    }
    if let Some(path) = &args.out {
        write_csv_file(path, &[record])?;
    }
    Ok(Report { text, violations: 0 })
}

/// Generation parameters of corpus instance `i`.
fn corpus_params(corpus: &CorpusArgs, i: usize, k: usize, trees_only: bool, values: ValueDistribution) -> GenParams {
    let rotation: &[Topology] = if trees_only { &Topology::ALL[..3] } else { &Topology::ALL };
    let topology = corpus.topology.map(Topology::from).unwrap_or(rotation[i % rotation.len()]);
    GenParams {
        n: 1 + i % corpus.n.max(1),
        k,
        topology,
        values,
        cap: corpus.cap,
        max_out_degree: Some(corpus.max_degree),
        seed: corpus.seed.wrapping_add(i as u64),
    }
}

fn default_values(name: MechanismName) -> ValueDistribution {
    match name {
        MechanismName::Gapg => ValueDistribution::Uniform,
        _ => ValueDistribution::Unit,
    }
}

fn cmd_verify(args: &VerifyArgs) -> Outcome<Report> {
    let mut corpus: Vec<(String, LoadedInstance)> = Vec::new();
    if let Some(s) = args.scenario {
        corpus.push(("edge-cut".into(), LoadedInstance { instance: scenario_instance(s)?, alpha: None }));
    } else if let Some(path) = &args.instance {
        corpus.push((path.display().to_string(), load(path)?));
    } else {
        if args.corpus.cap < 0 {
            return Err(input(anyhow!("--cap must be non-negative")));
        }
        let values = args.corpus.values.map(Into::into).unwrap_or(default_values(args.mech.mechanism));
        let trees_only = args.mech.mechanism == MechanismName::Gidm;
        for i in 0..args.corpus.count {
            let params = corpus_params(&args.corpus, i, args.k, trees_only, values);
            let inst = gen_instance(&params).map_err(input)?;
            corpus.push((format!("seed={}", params.seed), LoadedInstance { instance: inst, alpha: None }));
        }
    }

    let cfg = VerifierConfig::default();
    let mut rows = Vec::new();
    let mut text = String::new();
    let mut deviations = 0;
    let mut violations = 0;
    let mut name = String::new();
    for (id, loaded) in &corpus {
        let inst = &loaded.instance;
        let mech = mechanism_for(&args.mech, loaded.alpha)?;
        name = mech.name();
        let sp = check_strategy_proof(&mech, inst, &cfg).map_err(from_verifier)?;
        let ir = check_ir(&mech, inst).map_err(from_verifier)?;
        deviations += sp.deviations_evaluated;
        let mut row = VerifyRecord {
            mechanism: mech.name(),
            instance: id.clone(),
            n: inst.n(),
            k: inst.k(),
            deviations: sp.deviations_evaluated,
            sp_violation_buyer: String::new(),
            gain: String::new(),
            ir_violation_buyer: String::new(),
        };
        if let Some(r) = &sp.violation {
            violations += 1;
            row.sp_violation_buyer = inst.display_name(r.buyer);
            row.gain = exact(&r.gain);
            let neighbors = join(r.deviation.reported_neighbors.iter().map(|b| inst.display_name(*b)));
            let _ = writeln!(
                text,
                "violation  {id}: buyer {} gains {} by reporting valuations [{}] and neighbors {{{}}} \
                 (utility {} -> {})",
                inst.display_name(r.buyer),
                exact(&r.gain),
                join(r.deviation.reported_valuations.iter().map(exact)),
                neighbors,
                exact(&r.truthful_utility),
                exact(&r.deviant_utility),
            );
        }
        if let Some(v) = &ir {
            violations += 1;
            row.ir_violation_buyer = inst.display_name(v.buyer);
            let _ = writeln!(
                text,
                "violation  {id}: buyer {} has truthful utility {}",
                inst.display_name(v.buyer),
                exact(&v.utility)
            );
        }
        rows.push(row);
    }
    let _ = writeln!(text, "mechanism  {name}");
    let _ = writeln!(text, "instances  {}", corpus.len());
    let _ = writeln!(text, "deviations {deviations}");
    let _ = writeln!(text, "violations {violations}");
    if let Some(path) = &args.out {
        write_csv_file(path, &rows)?;
    }
    Ok(Report { text, violations })
}

/// Chain `s -> 1 -> 2 -> ... -> n` with the given valuation vectors.
fn chain(k: usize, cap: Value, values: Vec<Vec<Value>>) -> Outcome<AuctionInstance> {
    let n = values.len() as u32;
    let buyers: Vec<BuyerType> = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let id = i as u32 + 1;
            BuyerType::new(v, if id < n { vec![BuyerId(id + 1)] } else { vec![] })
        })
        .collect();
    let inst = AuctionInstance::new(k, [BuyerId(1)], buyers.clone())
        .and_then(|i| i.with_value_cap(cap))
        .and_then(|i| i.with_truth(buyers))
        .map_err(input)?;
    Ok(inst)
}

/// Hand-built worst cases on `n` buyers: for alpha-APG the near buyer at
/// exactly alpha times the far one, and the path whose only valuable buyer
/// sits at the end; for GAPG a lone buyer with flat marginals.
fn witnesses(name: MechanismName, n: usize, k: usize, cap: Value, alpha: Value) -> Outcome<Vec<AuctionInstance>> {
    let zero = Value::from_integer(0);
    let unit = |v: Value| vec![v];
    match name {
        MechanismName::AlphaApg if n >= 2 => {
            let mut near = vec![unit(alpha * cap), unit(cap)];
            near.resize(n, unit(zero));
            let mut far = vec![unit(zero); n - 1];
            far.push(unit(cap));
            Ok(vec![chain(k, cap, near)?, chain(k, cap, far)?])
        }
        MechanismName::Gapg => {
            let mut flat = vec![vec![cap; k]];
            flat.resize(n.max(1), vec![zero]);
            Ok(vec![chain(k, cap, flat)?])
        }
        _ => Ok(Vec::new()),
    }
}

fn cmd_sweep(args: &SweepArgs) -> Outcome<Report> {
    let corpus = &args.corpus;
    if corpus.cap <= 0 {
        return Err(input(anyhow!("--cap must be positive")));
    }
    let cap = Value::from_integer(corpus.cap);
    let points: Vec<(String, String, Value, usize)> = match args.mechanism {
        MechanismName::AlphaApg => {
            if args.alpha.is_empty() {
                return Err(input(anyhow!("alpha-apg sweeps need --alpha")));
            }
            args.alpha
                .iter()
                .map(|a| parse_alpha(a).map(|v| ("alpha".to_string(), format_value(&v), v, 1)))
                .collect::<Outcome<_>>()?
        }
        _ => {
            if args.k.is_empty() {
                return Err(input(anyhow!("{:?} sweeps need --k", args.mechanism)));
            }
            args.k.iter().map(|&k| ("k".to_string(), k.to_string(), Value::new(1, 2), k)).collect()
        }
    };

    let values = corpus.values.map(Into::into).unwrap_or(default_values(args.mechanism));
    let trees_only = args.mechanism == MechanismName::Gidm;
    let mut rows = Vec::new();
    for (parameter, shown, alpha, k) in points {
        let mech = build_mechanism(args.mechanism, Some(alpha), args.pricing)?;
        // Budget balance compares instances of one size, so every instance
        // has exactly `n` buyers here.
        let mut instances = Vec::new();
        for i in 0..corpus.count {
            let params = GenParams { n: corpus.n, ..corpus_params(corpus, i, k, trees_only, values) };
            instances.push(gen_instance(&params).map_err(input)?);
        }
        if !args.no_witnesses {
            instances.extend(witnesses(args.mechanism, corpus.n, k, cap, alpha)?);
        }
        if instances.is_empty() {
            return Err(input(anyhow!("the corpus is empty: raise --count or drop --no-witnesses")));
        }
        let efficiency = empirical_efficiency(&mech, &instances).map_err(sweep_error)?;
        let beta = empirical_beta(&mech, &instances, cap).map_err(sweep_error)?;
        rows.push(SweepRecord {
            mechanism: mech.name(),
            parameter,
            value: shown,
            instances: instances.len(),
            empirical_efficiency: exact(&efficiency),
            empirical_beta: exact(&beta),
        });
    }

    let mut buf = Vec::new();
    write_csv(&mut buf, &rows).map_err(input)?;
    let text = match &args.out {
        Some(path) => {
            write_csv_file(path, &rows)?;
            format!("wrote {} rows to {}\n", rows.len(), path.display())
        }
        None => String::from_utf8(buf).expect("CSV output is UTF-8"),
    };
    Ok(Report { text, violations: 0 })
}

fn sweep_error(e: AnalysisError) -> Failure {
    match e {
        AnalysisError::Mechanism(m) => precondition(m),
        other => input(other),
    }
}

fn cmd_gen(args: &GenArgs) -> Outcome<Report> {
    let params = GenParams {
        n: args.n,
        k: args.k,
        topology: args.topology.into(),
        values: args.values.into(),
        cap: args.cap,
        max_out_degree: args.max_degree,
        seed: args.seed,
    };
    if args.cap < 0 {
        return Err(input(anyhow!("--cap must be non-negative")));
    }
    let inst = gen_instance(&params).map_err(input)?;
    // Generated instances are truthful; the true profile is implied.
    let mut doc = InstanceFile::from_instance(&inst, None);
    doc.true_profile = None;
    let json = doc.to_json() + "\n";
    match &args.out {
        Some(path) => {
            std::fs::write(path, &json).with_context(|| format!("cannot write {}", path.display())).map_err(input)?;
            Ok(Report { text: format!("wrote {}\n", path.display()), violations: 0 })
        }
        None => Ok(Report { text: json, violations: 0 }),
    }
}

fn cmd_counterexample(args: &CounterexampleArgs) -> Outcome<Report> {
    let mut text = String::new();
    if args.search {
        if !(0..=20).contains(&args.max_value) {
            return Err(input(anyhow!("--max-value must lie in 0..=20")));
        }
        let found = search_gidm_counterexamples(args.max_value);
        let _ = writeln!(text, "{}", CUT_LABELS.join(","));
        for v in &found {
            let _ = writeln!(text, "{}", join(v.iter().map(i64::to_string)));
        }
        let _ = writeln!(text, "{} consistent valuation vectors", found.len());
        return Ok(Report { text, violations: 0 });
    }

    let inst = reconstruct_gidm_counterexample().map_err(precondition)?;
    let story = check_cut_narrative(&inst).map_err(precondition)?;
    let _ = writeln!(text, "tree       s -> a, f; a -> b; b -> c, g; c -> d; d -> e (k = {})", inst.k());
    let values = inst
        .buyer_ids()
        .map(|id| format!("{}={}", inst.display_name(id), format_value(&inst.true_type(id).marginal(1))));
    let _ = writeln!(text, "values     {}", values.collect::<Vec<_>>().join(" "));
    let _ = writeln!(text, "truthful");
    for e in &story.truthful.trace {
        let _ = writeln!(text, "  {}", e.describe(&inst));
    }
    let _ = writeln!(text, "  d's utility: {}", format_value(&story.d_truthful_utility));
    let _ = writeln!(text, "d withholds the auction from e");
    for e in &story.cut.trace {
        let _ = writeln!(text, "  {}", e.describe(&inst));
    }
    let _ = writeln!(text, "  d's utility: {}", format_value(&story.d_cut_utility));

    let sp = check_strategy_proof(&GidmRevised, &inst, &VerifierConfig::default()).map_err(from_verifier)?;
    match &sp.violation {
        Some(r) => {
            let _ = writeln!(
                text,
                "verifier   buyer {} gains {} by reporting neighbors {{{}}}",
                inst.display_name(r.buyer),
                format_value(&r.gain),
                join(r.deviation.reported_neighbors.iter().map(|b| inst.display_name(*b)))
            );
        }
        None => return Err(precondition(anyhow!("the verifier found no violation on the counterexample"))),
    }
    if let Some(path) = &args.out {
        let json = InstanceFile::from_instance(&inst, None).to_json() + "\n";
        std::fs::write(path, json).with_context(|| format!("cannot write {}", path.display())).map_err(input)?;
    }
    Ok(Report { text, violations: 0 })
}
