//! Batch front-end: instance files, mechanism runs, incentive audits,
//! efficiency/budget sweeps and the GIDM counterexample.
//!
//! Exit codes: 0 success, 1 violation found, 2 input error, 3 mechanism
//! precondition failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netauction::mechanisms::UnitPricing;
use netauction::verifier::{Topology, ValueDistribution};

mod commands;
pub mod instance_file;
pub mod records;

pub use commands::execute;

/// Environment variable holding the default corpus size for `verify` and
/// `sweep`.
pub const CORPUS_SIZE_ENV: &str = "NETAUCTION_CORPUS_SIZE";

#[derive(Debug, Parser)]
#[command(name = "netauction", version, about = "Diffusion auction mechanisms and incentive audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one mechanism on one instance.
    Run(RunArgs),
    /// Audit strategy-proofness and individual rationality over a corpus.
    Verify(VerifyArgs),
    /// Empirical efficiency and budget balance across parameter values.
    Sweep(SweepArgs),
    /// Generate a random instance document.
    Gen(GenArgs),
    /// Replay the GIDM counterexample, or search for consistent valuations.
    Counterexample(CounterexampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismName {
    AlphaApg,
    Gapg,
    GapgTopk,
    Gidm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    EdgeCut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyArg {
    Path,
    Star,
    RandomTree,
    RandomGraph,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Path => Topology::Path,
            TopologyArg::Star => Topology::Star,
            TopologyArg::RandomTree => Topology::RandomTree,
            TopologyArg::RandomGraph => Topology::RandomGraph,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ValuesArg {
    Uniform,
    Unit,
    Zero,
}

impl From<ValuesArg> for ValueDistribution {
    fn from(v: ValuesArg) -> Self {
        match v {
            ValuesArg::Uniform => ValueDistribution::Uniform,
            ValuesArg::Unit => ValueDistribution::Unit,
            ValuesArg::Zero => ValueDistribution::Zero,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MechanismArgs {
    #[arg(long, short = 'm', value_enum)]
    pub mechanism: MechanismName,
    /// alpha for alpha-apg, as a decimal or p/q. Falls back to the
    /// instance file, then to 1/2.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Order statistics used by gapg-topk: kth, mixed or max.
    #[arg(long, default_value = "kth", value_parser = parse_pricing)]
    pub pricing: UnitPricing,
}

fn parse_pricing(s: &str) -> Result<UnitPricing, String> {
    s.parse()
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Instance document (JSON).
    #[arg(required_unless_present = "scenario")]
    pub instance: Option<PathBuf>,
    #[command(flatten)]
    pub mech: MechanismArgs,
    /// Use a built-in instance instead of a file.
    #[arg(long, value_enum, conflicts_with = "instance")]
    pub scenario: Option<Scenario>,
    /// CSV output: header plus one row.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Number of generated instances.
    #[arg(long, env = CORPUS_SIZE_ENV, default_value_t = 200)]
    pub count: usize,
    /// Largest number of buyers; instance `i` has `1 + i mod n` buyers.
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// Topology of every instance; by default topologies rotate.
    #[arg(long, value_enum)]
    pub topology: Option<TopologyArg>,
    /// Valuation distribution; defaults to unit for single-item and
    /// unit-demand mechanisms, uniform for gapg.
    #[arg(long, value_enum)]
    pub values: Option<ValuesArg>,
    /// Integer valuation cap v*.
    #[arg(long, default_value_t = 10)]
    pub cap: i64,
    #[arg(long, default_value_t = 3)]
    pub max_degree: usize,
    /// Seed of the first instance; instance `i` uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub mech: MechanismArgs,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Number of items in generated instances.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Audit one instance document instead of a generated corpus.
    #[arg(long, conflicts_with = "scenario")]
    pub instance: Option<PathBuf>,
    /// Audit a built-in instance instead of a generated corpus.
    #[arg(long, value_enum)]
    pub scenario: Option<Scenario>,
    /// Per-instance CSV rows.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, short = 'm', value_enum)]
    pub mechanism: MechanismName,
    /// Values of alpha to sweep (alpha-apg), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<String>,
    /// Item counts to sweep (gapg, gapg-topk, gidm), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    #[arg(long, default_value = "kth", value_parser = parse_pricing)]
    pub pricing: UnitPricing,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Leave out the hand-built worst-case instances.
    #[arg(long)]
    pub no_witnesses: bool,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "random-tree")]
    pub topology: TopologyArg,
    #[arg(long, value_enum, default_value = "uniform")]
    pub values: ValuesArg,
    #[arg(long, default_value_t = 10)]
    pub cap: i64,
    #[arg(long)]
    pub max_degree: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Destination file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CounterexampleArgs {
    /// Enumerate every integer valuation vector that replays the story.
    #[arg(long)]
    pub search: bool,
    /// Largest valuation tried by --search.
    #[arg(long, default_value_t = 10)]
    pub max_value: i64,
    /// Write the instance document here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Text for stdout plus the number of violations found.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    pub text: String,
    pub violations: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0:#}")]
    Input(anyhow::Error),
    #[error("{0:#}")]
    Precondition(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Precondition(_) => 3,
        }
    }
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        u8::from(self.violations > 0)
    }
}
