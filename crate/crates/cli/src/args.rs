//! Command-line argument definitions.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use contsynth_core::mapping::SchemeKind;
use contsynth_core::spec::Metric;
use contsynth_core::synth::{BinMode, CheckMode, GeneInit};

#[derive(Debug, Parser)]
#[command(
    name = "contsynth",
    version,
    about = "Program synthesis by continuous optimization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a corpus of random synthesis tasks.
    GenCorpus(GenCorpusArgs),
    /// Estimate token probabilities from a corpus file.
    EstProbs(EstProbsArgs),
    /// Print the default token inventory as TSV.
    DumpInventory(DumpInventoryArgs),
    /// Synthesize a program for one example file.
    Synth(SynthArgs),
    /// Run a benchmark sweep over a corpus.
    Bench(BenchArgs),
    /// Exercise the optimizer on standard test functions.
    CmaSelftest(SelftestArgs),
}

#[derive(Debug, clap::Args)]
pub struct GenCorpusArgs {
    /// Number of tasks to generate.
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    /// Program length of every task.
    #[arg(long, default_value_t = 4)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output corpus file (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
    /// Token inventory TSV; the built-in inventory when omitted.
    #[arg(long)]
    pub inventory: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct EstProbsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output probability file (name<TAB>probability lines).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub inventory: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct DumpInventoryArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Example file, one {"input": ..., "output": ...} object per line.
    #[arg(long)]
    pub spec: PathBuf,
    /// Target program length.
    #[arg(long)]
    pub length: usize,
    #[arg(long, default_value = "bin")]
    pub scheme: SchemeKind,
    #[arg(long, default_value = "edit")]
    pub metric: Metric,
    /// Restart policy: off, none, or any +-combination of PB, MB, CB.
    /// "off" ends the run on the first stall; "none" restarts with only the
    /// step size reset.
    #[arg(long, default_value = "pb+cb")]
    pub policy: String,
    #[arg(long, default_value = "uniform")]
    pub bins: BinMode,
    #[arg(long, default_value = "normal")]
    pub init: GeneInit,
    #[arg(long, default_value = "full")]
    pub check: CheckMode,
    /// Token probability file; required for biased bins or learned init.
    #[arg(long)]
    pub probs: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub budget_secs: f64,
    /// Stop after this many sampled generations, for reproducible runs.
    #[arg(long)]
    pub max_gens: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma0: f64,
    /// Population size override.
    #[arg(long)]
    pub lambda: Option<usize>,
    #[arg(long, default_value_t = 4096)]
    pub max_lambda: usize,
    /// Evaluate each generation's genomes in parallel.
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub inventory: Option<PathBuf>,
    /// Write a per-generation trace table to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Per-run results CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-configuration aggregate CSV; stdout when omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Benchmark arm as key=value pairs, for example
    /// "scheme=bin,policy=pb+cb,bins=biased,check=full,init=normal".
    /// Repeatable; unset keys take the best-setup defaults.
    #[arg(long = "arm")]
    pub arms: Vec<String>,
    #[arg(long, default_value_t = 60.0)]
    pub budget_secs: f64,
    /// Runs per corpus entry, with consecutive derived seeds.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    /// Generation cap per run, for byte-reproducible sweeps.
    #[arg(long)]
    pub max_gens: Option<u64>,
    /// Token probability file, or "auto" to estimate from the corpus.
    #[arg(long, default_value = "auto")]
    pub probs: String,
    #[arg(long, default_value = "edit")]
    pub metric: Metric,
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub inventory: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SelftestArgs {
    /// Seeds per test function.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
}
