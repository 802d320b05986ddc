//! The `synth` command: one synthesis run over one example file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Duration;

use anyhow::{bail, Context};
use contsynth_core::cma::TraceRow;
use contsynth_core::dsl::TokenInventory;
use contsynth_core::mapping::TokenProbabilities;
use contsynth_core::spec::Specification;
use contsynth_core::synth::{synthesize_traced, StopReason, SynthConfig, SynthResult};
use serde_json::json;

use crate::args::SynthArgs;
use crate::{load_inventory, parse_policy, policy_name, EXIT_TIMEOUT};

pub fn synth(args: &SynthArgs) -> anyhow::Result<i32> {
    let inventory = load_inventory(args.inventory.as_deref())?;
    let spec = Specification::load_jsonl(&args.spec)
        .with_context(|| format!("loading examples {}", args.spec.display()))?;
    let probs = args
        .probs
        .as_deref()
        .map(|p| {
            TokenProbabilities::load(p, &inventory)
                .with_context(|| format!("loading probabilities {}", p.display()))
        })
        .transpose()?;
    if !(args.budget_secs.is_finite() && args.budget_secs >= 0.0) {
        bail!("budget must be a non-negative number of seconds");
    }

    let mut config = SynthConfig::new(args.scheme, args.length, args.seed);
    config.metric = args.metric;
    config.policy = parse_policy(&args.policy).map_err(anyhow::Error::msg)?;
    config.bins = args.bins;
    config.gene_init = args.init;
    config.check = args.check;
    config.budget = Duration::from_secs_f64(args.budget_secs);
    config.max_generations = args.max_gens;
    config.sigma0 = args.sigma0;
    config.lambda = args.lambda;
    config.max_lambda = args.max_lambda;
    config.parallel_eval = args.parallel;

    let result = match &args.trace {
        Some(path) => {
            let mut out = BufWriter::new(
                File::create(path).with_context(|| format!("creating trace {}", path.display()))?,
            );
            writeln!(out, "{}", TraceRow::header(false, 0))?;
            // Trace writes must not abort the run; flush surfaces failures.
            let mut sink = |row: &TraceRow| {
                let _ = writeln!(out, "{}", row.format(None));
            };
            let result =
                synthesize_traced(&inventory, probs.as_ref(), &spec, &config, Some(&mut sink))?;
            out.flush().context("flushing trace")?;
            result
        }
        None => synthesize_traced(&inventory, probs.as_ref(), &spec, &config, None)?,
    };

    println!(
        "{}",
        serde_json::to_string_pretty(&result_json(&config, &result, &inventory))?
    );
    Ok(match result.stop_reason {
        StopReason::Solved => 0,
        StopReason::Timeout => EXIT_TIMEOUT,
    })
}

/// The machine-readable report printed after a run.
pub fn result_json(
    config: &SynthConfig,
    result: &SynthResult,
    inventory: &TokenInventory,
) -> serde_json::Value {
    json!({
        "config": {
            "scheme": config.scheme.as_str(),
            "length": config.target_length,
            "metric": config.metric.to_string(),
            "policy": policy_name(config.policy),
            "bins": config.bins.as_str(),
            "init": config.gene_init.as_str(),
            "check": config.check.as_str(),
            "budget_secs": config.budget.as_secs_f64(),
            "max_generations": config.max_generations,
            "seed": config.seed,
            "sigma0": config.sigma0,
            "lambda": config.lambda,
            "max_lambda": config.max_lambda,
            "parallel": config.parallel_eval,
        },
        "result": {
            "solved": result.stop_reason == StopReason::Solved,
            "program": result.found.as_ref().map(|p| inventory.format_program(p)),
            "stop_reason": result.stop_reason.to_string(),
            "wall_secs": result.wall_time.as_secs_f64(),
            "generations": result.generations,
            "restarts": result.restarts,
            "programs_explored": result.programs_explored,
            "best_error": result.best_error,
            "restart_log": result.restart_log,
        },
    })
}
