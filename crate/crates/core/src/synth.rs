//! The synthesis engine: CMA-ES over genomes, decoded to candidate programs.
//!
//! Each genome decodes to one or more candidates. A genome's objective is the
//! smallest output distance any of its candidates achieves over the whole
//! example set; a candidate with distance zero solves the task. When the
//! strategy stalls, the configured restart policy kicks in. A run ends when a
//! program is found, the wall budget runs out, the generation cap is reached,
//! or a stall happens with no restart policy to answer it.

use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cma::{CmaError, CmaParams, CmaState, StagnationSignal, TraceRow};
use crate::dsl::{Program, TokenInventory};
use crate::mapping::{
    learned_gene_value, BinLayout, MappingError, MappingScheme, SchemeKind, TokenProbabilities,
};
use crate::restart::{
    apply_restart, RestartContext, RestartError, RestartPolicy, DEFAULT_MAX_LAMBDA,
};
use crate::spec::{error, satisfies, Metric, Specification};

/// Half-width of the box the distribution mean is projected into after each
/// update, the same box mean restarts draw from. Selection on an edge bin
/// pushes that coordinate outward forever while the decoded token stays
/// put; left unchecked the mean drifts many sigma out and no restart can
/// recenter the search over the other tokens. Inside the box every bin
/// stays within sampling reach at the reset step size.
const MEAN_BOUND: f64 = 2.0;

/// How genes are split into token bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinMode {
    /// Every token gets an equal slice of probability mass.
    Uniform,
    /// Bin widths follow supplied token probabilities.
    Biased,
}

impl BinMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BinMode::Uniform => "uniform",
            BinMode::Biased => "biased",
        }
    }
}

impl fmt::Display for BinMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BinMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(BinMode::Uniform),
            "biased" => Ok(BinMode::Biased),
            other => Err(format!("unknown bin mode {other:?}")),
        }
    }
}

/// Where the initial search mean starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneInit {
    /// All genes start at zero.
    Normal,
    /// Bin-indexed genes start centered on the most probable token's bin.
    /// Genes that do not index bins (length genes, group scores) stay at zero.
    Learned,
}

impl GeneInit {
    pub fn as_str(self) -> &'static str {
        match self {
            GeneInit::Normal => "normal",
            GeneInit::Learned => "learned",
        }
    }
}

impl fmt::Display for GeneInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GeneInit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normal" => Ok(GeneInit::Normal),
            "learned" => Ok(GeneInit::Learned),
            other => Err(format!("unknown gene init {other:?}")),
        }
    }
}

/// Which programs a decoded candidate is checked against the examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    /// Each candidate is checked as decoded.
    Full,
    /// Every prefix of each candidate is checked, shortest first.
    Sub,
}

impl CheckMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckMode::Full => "full",
            CheckMode::Sub => "sub",
        }
    }
}

impl fmt::Display for CheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CheckMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(CheckMode::Full),
            "sub" => Ok(CheckMode::Sub),
            other => Err(format!("unknown check mode {other:?}")),
        }
    }
}

/// Full description of one synthesis run.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub scheme: SchemeKind,
    pub target_length: usize,
    pub metric: Metric,
    /// `None` means a stall ends the run instead of restarting.
    pub policy: Option<RestartPolicy>,
    pub bins: BinMode,
    pub gene_init: GeneInit,
    pub check: CheckMode,
    pub budget: Duration,
    /// Extra cap on sampled generations, for reproducible run lengths.
    pub max_generations: Option<u64>,
    pub seed: u64,
    pub sigma0: f64,
    /// Population override; `None` picks the dimension default.
    pub lambda: Option<usize>,
    pub max_lambda: usize,
    pub parallel_eval: bool,
}

impl SynthConfig {
    pub fn new(scheme: SchemeKind, target_length: usize, seed: u64) -> Self {
        SynthConfig {
            scheme,
            target_length,
            metric: Metric::Edit,
            policy: Some(RestartPolicy::PB_CB),
            bins: BinMode::Uniform,
            gene_init: GeneInit::Normal,
            check: CheckMode::Full,
            budget: Duration::from_secs(10),
            max_generations: None,
            seed,
            sigma0: 1.0,
            lambda: None,
            max_lambda: DEFAULT_MAX_LAMBDA,
            parallel_eval: false,
        }
    }
}

/// Errors raised before the search loop starts.
#[derive(Debug)]
pub enum SynthError {
    /// Biased bins or learned init need token probabilities.
    MissingProbabilities,
    BadSigma(f64),
    Mapping(MappingError),
    Cma(CmaError),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::MissingProbabilities => {
                write!(f, "biased bins and learned init need token probabilities")
            }
            SynthError::BadSigma(s) => write!(f, "initial step size {s} must be positive"),
            SynthError::Mapping(e) => write!(f, "mapping: {e}"),
            SynthError::Cma(e) => write!(f, "strategy: {e}"),
        }
    }
}

impl std::error::Error for SynthError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            SynthError::Mapping(e) => Some(e),
            SynthError::Cma(e) => Some(e),
            _ => None,
        }
    }
}

impl From<MappingError> for SynthError {
    fn from(e: MappingError) -> Self {
        SynthError::Mapping(e)
    }
}

impl From<CmaError> for SynthError {
    fn from(e: CmaError) -> Self {
        SynthError::Cma(e)
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Solved,
    Timeout,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Solved => f.write_str("solved"),
            StopReason::Timeout => f.write_str("timeout"),
        }
    }
}

/// One restart, as it happened.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RestartEvent {
    /// Sampled generations completed when the stall was detected.
    pub generation: u64,
    pub reason: StagnationSignal,
    /// Population size after the restart.
    pub lambda: usize,
    /// True when a population restart was requested but lambda was already
    /// at the ceiling, so only the other flagged parts were reset.
    pub at_cap: bool,
}

/// Outcome of one synthesis run.
#[derive(Debug, Clone)]
pub struct SynthResult {
    pub found: Option<Program>,
    pub wall_time: Duration,
    /// Generations sampled and evaluated, including ones ending in a restart.
    pub generations: u64,
    pub restarts: u64,
    /// Candidate checks against the examples, the run's search cost.
    pub programs_explored: u64,
    pub stop_reason: StopReason,
    pub restart_log: Vec<RestartEvent>,
    /// Best objective seen; `None` when nothing was evaluated.
    pub best_error: Option<u64>,
}

/// Scans candidates for one satisfying the examples. Returns the first hit
/// in scan order and the number of checks spent, hit included. `Sub` scans
/// every prefix of each candidate, shortest first, and may therefore return
/// a program shorter than any candidate.
pub fn check_candidates(
    candidates: &[Program],
    spec: &Specification,
    mode: CheckMode,
) -> (Option<Program>, u64) {
    let mut checks = 0;
    for cand in candidates {
        match mode {
            CheckMode::Full => {
                checks += 1;
                if satisfies(cand, spec) {
                    return (Some(cand.clone()), checks);
                }
            }
            CheckMode::Sub => {
                for k in 1..=cand.len() {
                    checks += 1;
                    let prefix = cand.prefix(k);
                    if satisfies(&prefix, spec) {
                        return (Some(prefix), checks);
                    }
                }
            }
        }
    }
    (None, checks)
}

struct GenomeEval {
    objective: u64,
    checks: u64,
    hit: Option<Program>,
}

fn evaluate_genome(
    genome: &DVector<f64>,
    scheme: &MappingScheme,
    layout: &BinLayout,
    inventory: &TokenInventory,
    spec: &Specification,
    metric: Metric,
    check: CheckMode,
) -> GenomeEval {
    let decoded = scheme
        .decode(genome.as_slice(), layout, inventory)
        .expect("genome dimension fixed at setup");
    let (hit, checks) = check_candidates(&decoded.candidates, spec, check);
    let objective = if hit.is_some() {
        0
    } else {
        decoded
            .candidates
            .iter()
            .map(|c| error(c, spec, metric).scalar)
            .min()
            .expect("every scheme decodes at least one candidate")
    };
    GenomeEval {
        objective,
        checks,
        hit,
    }
}

/// Runs one synthesis attempt.
pub fn synthesize(
    inventory: &TokenInventory,
    probs: Option<&TokenProbabilities>,
    spec: &Specification,
    config: &SynthConfig,
) -> Result<SynthResult, SynthError> {
    synthesize_traced(inventory, probs, spec, config, None)
}

/// Like `synthesize`, with an optional per-generation trace callback. The
/// callback only sees generations that fed a strategy update.
pub fn synthesize_traced(
    inventory: &TokenInventory,
    probs: Option<&TokenProbabilities>,
    spec: &Specification,
    config: &SynthConfig,
    mut trace: Option<&mut dyn FnMut(&TraceRow)>,
) -> Result<SynthResult, SynthError> {
    let start = Instant::now();
    if !(config.sigma0 > 0.0 && config.sigma0.is_finite()) {
        return Err(SynthError::BadSigma(config.sigma0));
    }
    let needs_probs = config.bins == BinMode::Biased || config.gene_init == GeneInit::Learned;
    if needs_probs && probs.is_none() {
        return Err(SynthError::MissingProbabilities);
    }
    if let Some(p) = probs {
        if p.len() != inventory.len() {
            return Err(MappingError::SizeMismatch {
                expected: inventory.len(),
                found: p.len(),
            }
            .into());
        }
    }

    let scheme = MappingScheme::new(config.scheme, config.target_length, inventory.len())?;
    let layout = match config.bins {
        BinMode::Uniform => BinLayout::uniform(inventory.len())?,
        BinMode::Biased => BinLayout::from_probs(probs.expect("checked above")),
    };
    let dim = scheme.genome_dimension();
    let mean0 = match config.gene_init {
        GeneInit::Normal => DVector::zeros(dim),
        GeneInit::Learned => {
            let v = learned_gene_value(&layout, probs.expect("checked above"));
            let bin_genes = match config.scheme {
                SchemeKind::Bin => dim,
                SchemeKind::DynamicBin => config.target_length,
                _ => 0,
            };
            DVector::from_fn(dim, |i, _| if i < bin_genes { v } else { 0.0 })
        }
    };
    let params = match config.lambda {
        Some(lambda) => CmaParams::with_lambda(dim, lambda)?,
        None => CmaParams::default_for(dim)?,
    };
    let mut state = CmaState::init(params, mean0, config.sigma0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ctx = RestartContext {
        sigma0: config.sigma0,
        max_lambda: config.max_lambda,
    };

    let mut generations: u64 = 0;
    let mut restarts: u64 = 0;
    let mut programs_explored: u64 = 0;
    let mut best_error: Option<u64> = None;
    let mut restart_log = Vec::new();
    // Running best since the last restart, one entry per update generation.
    let mut history: Vec<f64> = Vec::new();
    let mut found = None;

    let stop_reason = loop {
        if start.elapsed() >= config.budget {
            break StopReason::Timeout;
        }
        if config.max_generations.is_some_and(|cap| generations >= cap) {
            break StopReason::Timeout;
        }

        let genomes = state.sample(&mut rng);
        let evals: Vec<GenomeEval> = if config.parallel_eval {
            genomes
                .par_iter()
                .map(|g| {
                    evaluate_genome(
                        g,
                        &scheme,
                        &layout,
                        inventory,
                        spec,
                        config.metric,
                        config.check,
                    )
                })
                .collect()
        } else {
            genomes
                .iter()
                .map(|g| {
                    evaluate_genome(
                        g,
                        &scheme,
                        &layout,
                        inventory,
                        spec,
                        config.metric,
                        config.check,
                    )
                })
                .collect()
        };
        generations += 1;

        // Cost accounting stops at the first hit in sample order, so a
        // parallel run reports the same count a sequential one would.
        for eval in &evals {
            programs_explored += eval.checks;
            if let Some(program) = &eval.hit {
                found = Some(program.clone());
                break;
            }
        }
        if found.is_some() {
            best_error = Some(0);
            break StopReason::Solved;
        }

        state.note_evals(evals.len() as u64);
        let gen_best = evals
            .iter()
            .map(|e| e.objective)
            .min()
            .expect("lambda >= 2");
        best_error = Some(best_error.map_or(gen_best, |b| b.min(gen_best)));
        let running = history
            .last()
            .map_or(gen_best as f64, |&h| h.min(gen_best as f64));
        history.push(running);

        if let Some(signal) = state.check_stagnation(&history) {
            let Some(policy) = config.policy else {
                break StopReason::Timeout;
            };
            let at_cap = match apply_restart(policy, &mut state, &ctx, &mut rng) {
                Ok(()) => false,
                Err(RestartError::BudgetExhausted { .. }) => {
                    // Lambda is pinned at the ceiling; fall back to the other
                    // flagged resets, or give up when there are none.
                    let fallback = RestartPolicy {
                        population: false,
                        ..policy
                    };
                    if fallback == RestartPolicy::NONE {
                        break StopReason::Timeout;
                    }
                    apply_restart(fallback, &mut state, &ctx, &mut rng)
                        .expect("restart without population growth cannot fail");
                    true
                }
            };
            restarts += 1;
            restart_log.push(RestartEvent {
                generation: generations,
                reason: signal,
                lambda: state.params().lambda,
                at_cap,
            });
            history.clear();
            continue;
        }

        let mut order: Vec<usize> = (0..genomes.len()).collect();
        order.sort_by_key(|&i| evals[i].objective);
        let ranked: Vec<DVector<f64>> = order.iter().map(|&i| genomes[i].clone()).collect();
        state.update(&ranked)?;
        let bounded = state.mean().map(|m| m.clamp(-MEAN_BOUND, MEAN_BOUND));
        state.set_mean(bounded);
        if let Some(sink) = trace.as_deref_mut() {
            let row = TraceRow::from_state(&state, gen_best as f64);
            sink(&row);
        }
    };

    Ok(SynthResult {
        found,
        wall_time: start.elapsed(),
        generations,
        restarts,
        programs_explored,
        stop_reason,
        restart_log,
        best_error,
    })
}
