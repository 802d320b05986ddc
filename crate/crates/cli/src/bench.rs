//! The `bench` command: a sweep of synthesis runs over a corpus, reported as
//! CSV rows plus per-configuration aggregates.
//!
//! Result files carry no wall-clock readings. The cost column is the modeled
//! cost `programs_explored / 100000`, so a sweep rerun with the same seeds
//! and generation cap reproduces its output byte for byte; real elapsed time
//! goes to stderr only.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use contsynth_core::corpus::{estimate_token_probs, load_corpus, CorpusEntry};
use contsynth_core::dsl::TokenInventory;
use contsynth_core::mapping::{SchemeKind, TokenProbabilities};
use contsynth_core::restart::RestartPolicy;
use contsynth_core::spec::Metric;
use contsynth_core::synth::{
    synthesize, BinMode, CheckMode, GeneInit, StopReason, SynthConfig, SynthError, SynthResult,
};

use crate::args::BenchArgs;
use crate::{parse_policy, policy_name};

/// Entry index stride between per-entry seed blocks.
pub const SEED_STRIDE: u64 = 1_000_003;
/// Candidate checks per unit of modeled cost.
pub const COST_UNIT: f64 = 100_000.0;

pub const ROWS_HEADER: &str = "config_id,scheme,policy,bins,check,metric,length,\
entry,seed,solved,stop_reason,generations,restarts,programs_explored,cost_s";
pub const SUMMARY_HEADER: &str = "config_id,total,solved,percentage,cost_min,\
cost_p25,cost_median,cost_p75,cost_max,mean_programs_explored";

/// One benchmark configuration. Unset keys fall back to the best setup:
/// bin mapping, PB+CB restarts, biased bins, full checking, normal init.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchArm {
    pub scheme: SchemeKind,
    pub policy: Option<RestartPolicy>,
    pub bins: BinMode,
    pub check: CheckMode,
    pub init: GeneInit,
}

impl BenchArm {
    pub fn best_setup() -> Self {
        BenchArm {
            scheme: SchemeKind::Bin,
            policy: Some(RestartPolicy::PB_CB),
            bins: BinMode::Biased,
            check: CheckMode::Full,
            init: GeneInit::Normal,
        }
    }

    /// Parses "key=value" pairs separated by commas.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut arm = BenchArm::best_setup();
        for part in text.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
            match key.trim() {
                "scheme" => arm.scheme = value.trim().parse()?,
                "policy" => arm.policy = parse_policy(value.trim())?,
                "bins" => arm.bins = value.trim().parse()?,
                "check" => arm.check = value.trim().parse()?,
                "init" => arm.init = value.trim().parse()?,
                other => return Err(format!("unknown arm key {other:?}")),
            }
        }
        Ok(arm)
    }

    /// Stable identifier used as the CSV grouping key.
    pub fn id(&self, metric: Metric) -> String {
        format!(
            "{}/{}/{}/{}/{}/{}",
            self.scheme,
            policy_name(self.policy),
            self.bins,
            self.check,
            self.init,
            metric
        )
    }
}

/// One synthesis run within a sweep.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub arm: BenchArm,
    pub metric: Metric,
    pub length: usize,
    pub entry: usize,
    pub seed: u64,
    pub result: SynthResult,
}

impl RunRecord {
    pub fn solved(&self) -> bool {
        self.result.stop_reason == StopReason::Solved
    }

    pub fn cost(&self) -> f64 {
        self.result.programs_explored as f64 / COST_UNIT
    }
}

/// Shared knobs for every run of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepSettings {
    pub metric: Metric,
    pub budget: Duration,
    pub max_generations: Option<u64>,
    pub seeds: usize,
    pub base_seed: u64,
    pub parallel: bool,
}

/// Seed for run `seed_idx` of corpus entry `entry_idx`.
pub fn run_seed(base_seed: u64, entry_idx: usize, seed_idx: usize) -> u64 {
    base_seed
        .wrapping_add((entry_idx as u64).wrapping_mul(SEED_STRIDE))
        .wrapping_add(seed_idx as u64)
}

/// Runs one arm over the whole corpus, sequentially, in entry-then-seed order.
pub fn run_arm(
    arm: &BenchArm,
    corpus: &[CorpusEntry],
    inventory: &TokenInventory,
    probs: Option<&TokenProbabilities>,
    settings: &SweepSettings,
) -> Result<Vec<RunRecord>, SynthError> {
    let mut records = Vec::with_capacity(corpus.len() * settings.seeds);
    for (entry_idx, entry) in corpus.iter().enumerate() {
        for seed_idx in 0..settings.seeds {
            let seed = run_seed(settings.base_seed, entry_idx, seed_idx);
            let mut config = SynthConfig::new(arm.scheme, entry.program.len(), seed);
            config.metric = settings.metric;
            config.policy = arm.policy;
            config.bins = arm.bins;
            config.gene_init = arm.init;
            config.check = arm.check;
            config.budget = settings.budget;
            config.max_generations = settings.max_generations;
            config.parallel_eval = settings.parallel;
            let result = synthesize(inventory, probs, &entry.spec, &config)?;
            records.push(RunRecord {
                arm: *arm,
                metric: settings.metric,
                length: entry.program.len(),
                entry: entry_idx,
                seed,
                result,
            });
        }
    }
    Ok(records)
}

/// Renders the per-run CSV, header included.
pub fn rows_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(ROWS_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.5}",
            r.arm.id(r.metric),
            r.arm.scheme,
            policy_name(r.arm.policy),
            r.arm.bins,
            r.arm.check,
            r.metric,
            r.length,
            r.entry,
            r.seed,
            r.solved(),
            r.result.stop_reason,
            r.result.generations,
            r.result.restarts,
            r.result.programs_explored,
            r.cost()
        )
        .expect("writing to a string cannot fail");
    }
    out
}

/// Aggregate over one configuration's rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub config_id: String,
    pub total: usize,
    pub solved: usize,
    /// Solved share in percent.
    pub percentage: f64,
    /// Min, lower quartile, median, upper quartile, max of the modeled cost
    /// over solved runs; `None` when nothing was solved.
    pub cost_quantiles: Option<[f64; 5]>,
    /// Mean candidate checks over all runs, solved or not.
    pub mean_explored: f64,
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Groups records by configuration id, preserving first-seen order.
pub fn summarize(records: &[RunRecord]) -> Vec<ArmSummary> {
    let mut ids: Vec<String> = Vec::new();
    for r in records {
        let id = r.arm.id(r.metric);
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    ids.iter()
        .map(|id| {
            let group: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.arm.id(r.metric) == *id)
                .collect();
            let total = group.len();
            let solved = group.iter().filter(|r| r.solved()).count();
            let mut costs: Vec<f64> = group
                .iter()
                .filter(|r| r.solved())
                .map(|r| r.cost())
                .collect();
            costs.sort_by(f64::total_cmp);
            let cost_quantiles = (!costs.is_empty())
                .then(|| [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile(&costs, q)));
            let mean_explored = group
                .iter()
                .map(|r| r.result.programs_explored as f64)
                .sum::<f64>()
                / total as f64;
            ArmSummary {
                config_id: id.clone(),
                total,
                solved,
                percentage: 100.0 * solved as f64 / total as f64,
                cost_quantiles,
                mean_explored,
            }
        })
        .collect()
}

/// Renders the aggregate CSV, header included.
pub fn summary_csv(summaries: &[ArmSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in summaries {
        let quantiles = match s.cost_quantiles {
            Some(qs) => qs.map(|v| format!("{v:.5}")).join(","),
            None => ",,,,".into(),
        };
        writeln!(
            out,
            "{},{},{},{:.1},{},{:.1}",
            s.config_id, s.total, s.solved, s.percentage, quantiles, s.mean_explored
        )
        .expect("writing to a string cannot fail");
    }
    out
}

pub fn bench(args: &BenchArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let inventory = crate::load_inventory(args.inventory.as_deref())?;
    let corpus = load_corpus(&args.corpus, &inventory)
        .with_context(|| format!("loading corpus {}", args.corpus.display()))?;
    if corpus.is_empty() {
        bail!("corpus {} holds no tasks", args.corpus.display());
    }
    if !(args.budget_secs.is_finite() && args.budget_secs >= 0.0) {
        bail!("budget must be a non-negative number of seconds");
    }
    if args.seeds == 0 {
        bail!("need at least one seed per entry");
    }

    let arms: Vec<BenchArm> = if args.arms.is_empty() {
        vec![BenchArm::best_setup()]
    } else {
        args.arms
            .iter()
            .map(|s| BenchArm::parse(s).map_err(anyhow::Error::msg))
            .collect::<anyhow::Result<_>>()?
    };
    let probs = if args.probs == "auto" {
        estimate_token_probs(&corpus, &inventory).context("estimating probabilities")?
    } else {
        TokenProbabilities::load(args.probs.as_ref(), &inventory)
            .with_context(|| format!("loading probabilities {}", args.probs))?
    };
    let settings = SweepSettings {
        metric: args.metric,
        budget: Duration::from_secs_f64(args.budget_secs),
        max_generations: args.max_gens,
        seeds: args.seeds,
        base_seed: args.base_seed,
        parallel: args.parallel,
    };

    let mut records = Vec::new();
    for arm in &arms {
        let arm_started = Instant::now();
        let arm_records = run_arm(arm, &corpus, &inventory, Some(&probs), &settings)?;
        let solved = arm_records.iter().filter(|r| r.solved()).count();
        eprintln!(
            "{}: {}/{} solved in {:.1}s",
            arm.id(settings.metric),
            solved,
            arm_records.len(),
            arm_started.elapsed().as_secs_f64()
        );
        records.extend(arm_records);
    }

    std::fs::write(&args.out, rows_csv(&records))
        .with_context(|| format!("writing {}", args.out.display()))?;
    let summary = summary_csv(&summarize(&records));
    match &args.summary {
        Some(path) => {
            std::fs::write(path, summary).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{summary}"),
    }
    eprintln!(
        "{} runs in {:.1}s, rows in {}",
        records.len(),
        started.elapsed().as_secs_f64(),
        args.out.display()
    );
    Ok(())
}
