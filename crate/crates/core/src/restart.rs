//! Restart policies for a stalled search.
//!
//! A restart always returns the step size to its initial value; the policy
//! flags decide what else changes. Population-based restarts double lambda,
//! mean-based restarts re-randomize the search center, covariance-based
//! restarts forget the adapted shape. Unflagged components carry over
//! untouched.

use std::fmt;

use nalgebra::DVector;
use rand::Rng;

use crate::cma::{CmaParams, CmaState};

/// Hard ceiling on population growth.
pub const DEFAULT_MAX_LAMBDA: usize = 4096;
/// Hyper-rectangle from which mean-based restarts draw the new center.
pub const MEAN_INIT_LOW: f64 = -2.0;
pub const MEAN_INIT_HIGH: f64 = 2.0;

/// Which state components a restart resets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RestartPolicy {
    /// PB: double the population size.
    pub population: bool,
    /// MB: re-randomize the mean.
    pub mean: bool,
    /// CB: reset the covariance and both paths.
    pub covariance: bool,
}

impl RestartPolicy {
    pub const NONE: RestartPolicy = RestartPolicy {
        population: false,
        mean: false,
        covariance: false,
    };
    pub const PB: RestartPolicy = RestartPolicy {
        population: true,
        mean: false,
        covariance: false,
    };
    pub const MB: RestartPolicy = RestartPolicy {
        population: false,
        mean: true,
        covariance: false,
    };
    pub const CB: RestartPolicy = RestartPolicy {
        population: false,
        mean: false,
        covariance: true,
    };
    pub const PB_CB: RestartPolicy = RestartPolicy {
        population: true,
        mean: false,
        covariance: true,
    };

    /// All eight flag combinations, `none` first.
    pub const ALL: [RestartPolicy; 8] = [
        RestartPolicy::NONE,
        RestartPolicy::PB,
        RestartPolicy::MB,
        RestartPolicy::CB,
        RestartPolicy {
            population: true,
            mean: true,
            covariance: false,
        },
        RestartPolicy::PB_CB,
        RestartPolicy {
            population: false,
            mean: true,
            covariance: true,
        },
        RestartPolicy {
            population: true,
            mean: true,
            covariance: true,
        },
    ];
}

impl fmt::Display for RestartPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == RestartPolicy::NONE {
            return f.write_str("none");
        }
        let mut parts = Vec::new();
        if self.population {
            parts.push("PB");
        }
        if self.mean {
            parts.push("MB");
        }
        if self.covariance {
            parts.push("CB");
        }
        f.write_str(&parts.join("+"))
    }
}

impl std::str::FromStr for RestartPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(RestartPolicy::NONE);
        }
        let mut policy = RestartPolicy::NONE;
        for part in s.split('+') {
            match part.trim() {
                p if p.eq_ignore_ascii_case("pb") => policy.population = true,
                p if p.eq_ignore_ascii_case("mb") => policy.mean = true,
                p if p.eq_ignore_ascii_case("cb") => policy.covariance = true,
                other => return Err(format!("unknown restart component {other:?}")),
            }
        }
        Ok(policy)
    }
}

/// Initial-state parameters a restart may need.
#[derive(Debug, Clone, Copy)]
pub struct RestartContext {
    pub sigma0: f64,
    pub max_lambda: usize,
}

impl RestartContext {
    pub fn new(sigma0: f64) -> Self {
        RestartContext {
            sigma0,
            max_lambda: DEFAULT_MAX_LAMBDA,
        }
    }
}

/// Errors from applying a restart.
#[derive(Debug, PartialEq, Eq)]
pub enum RestartError {
    /// PB requested but lambda already sits at the ceiling.
    BudgetExhausted { lambda: usize },
}

impl fmt::Display for RestartError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RestartError::BudgetExhausted { lambda } => {
                write!(f, "population already at the maximum of {lambda}")
            }
        }
    }
}

impl std::error::Error for RestartError {}

/// Applies a restart in place. On error the state is untouched. Generation
/// and evaluation counters always carry over; the step size always resets.
pub fn apply_restart<R: Rng>(
    policy: RestartPolicy,
    state: &mut CmaState,
    ctx: &RestartContext,
    rng: &mut R,
) -> Result<(), RestartError> {
    let n = state.params().n;
    let new_params = if policy.population {
        let lambda = state.params().lambda;
        if lambda >= ctx.max_lambda {
            return Err(RestartError::BudgetExhausted { lambda });
        }
        let doubled = (lambda * 2).min(ctx.max_lambda);
        Some(CmaParams::with_lambda(n, doubled).expect("doubling keeps lambda valid"))
    } else {
        None
    };
    if let Some(params) = new_params {
        state.swap_params(params);
    }
    if policy.mean {
        let mean = DVector::from_fn(n, |_, _| rng.gen_range(MEAN_INIT_LOW..MEAN_INIT_HIGH));
        state.set_mean(mean);
    }
    if policy.covariance {
        state.reset_covariance();
    }
    state.set_sigma(ctx.sigma0);
    Ok(())
}
