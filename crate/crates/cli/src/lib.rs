//! Command implementations behind the `contsynth` binary.

use std::path::Path;

use anyhow::Context;
use contsynth_core::dsl::{default_inventory, TokenInventory};
use contsynth_core::restart::RestartPolicy;

pub mod args;
pub mod bench;
pub mod corpus;
pub mod selftest;
pub mod synth;

/// Process exit code for a run that ended without finding a program.
pub const EXIT_TIMEOUT: i32 = 2;

/// Dispatches a parsed command line; returns the process exit code.
pub fn run(cli: args::Cli) -> anyhow::Result<i32> {
    match cli.command {
        args::Command::GenCorpus(a) => corpus::gen_corpus(&a).map(|()| 0),
        args::Command::EstProbs(a) => corpus::est_probs(&a).map(|()| 0),
        args::Command::DumpInventory(a) => corpus::dump_inventory(&a).map(|()| 0),
        args::Command::Synth(a) => synth::synth(&a),
        args::Command::Bench(a) => bench::bench(&a).map(|()| 0),
        args::Command::CmaSelftest(a) => selftest::selftest(&a),
    }
}

/// Loads a token inventory, falling back to the built-in one.
pub fn load_inventory(path: Option<&Path>) -> anyhow::Result<TokenInventory> {
    match path {
        Some(p) => {
            TokenInventory::load(p).with_context(|| format!("loading inventory {}", p.display()))
        }
        None => Ok(default_inventory()),
    }
}

/// Parses the policy argument: "off" disables restarts entirely, any other
/// value is a restart policy name.
pub fn parse_policy(s: &str) -> Result<Option<RestartPolicy>, String> {
    if s.eq_ignore_ascii_case("off") {
        return Ok(None);
    }
    s.parse().map(Some)
}

/// Display name for an optional policy, inverse of `parse_policy`.
pub fn policy_name(policy: Option<RestartPolicy>) -> String {
    match policy {
        None => "off".into(),
        Some(p) => p.to_string(),
    }
}
