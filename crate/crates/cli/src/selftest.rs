//! The `cma-selftest` command: quick health checks for the optimizer on
//! standard test functions, independent of any synthesis machinery.

use contsynth_core::cma::{CmaParams, CmaState};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::args::SelftestArgs;

fn sphere(x: &DVector<f64>) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn rosenbrock(x: &DVector<f64>) -> f64 {
    (0..x.len() - 1)
        .map(|i| {
            let a = x[i + 1] - x[i] * x[i];
            let b = 1.0 - x[i];
            100.0 * a * a + b * b
        })
        .sum()
}

/// Runs the strategy on `f` until the best value drops below `target` or the
/// generation cap is reached. Returns the best value seen.
fn minimize(
    f: impl Fn(&DVector<f64>) -> f64,
    mean0: DVector<f64>,
    sigma0: f64,
    seed: u64,
    target: f64,
    max_gens: u64,
) -> f64 {
    let params = CmaParams::default_for(mean0.len()).expect("valid dimension");
    let mut state = CmaState::init(params, mean0, sigma0).expect("valid init");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..max_gens {
        let pop = state.sample(&mut rng);
        state.note_evals(pop.len() as u64);
        let mut scored: Vec<(f64, DVector<f64>)> = pop.into_iter().map(|g| (f(&g), g)).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        best = best.min(scored[0].0);
        if best < target {
            break;
        }
        let ranked: Vec<DVector<f64>> = scored.into_iter().map(|(_, g)| g).collect();
        state.update(&ranked).expect("population matches params");
    }
    best
}

/// One run recording mean, step size, and covariance bits for comparison.
fn strategy_fingerprint(
    rank_value: impl Fn(f64) -> f64,
    seed: u64,
    gens: u64,
) -> (Vec<u64>, u64, Vec<u64>) {
    let n = 6;
    let params = CmaParams::default_for(n).unwrap();
    let mut state = CmaState::init(params, DVector::from_element(n, 2.0), 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..gens {
        let pop = state.sample(&mut rng);
        let mut scored: Vec<(f64, DVector<f64>)> = pop
            .into_iter()
            .map(|g| (rank_value(sphere(&g)), g))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ranked: Vec<DVector<f64>> = scored.into_iter().map(|(_, g)| g).collect();
        state.update(&ranked).unwrap();
    }
    (
        state.mean().iter().map(|v| v.to_bits()).collect(),
        state.sigma().to_bits(),
        state.cov().iter().map(|v| v.to_bits()).collect(),
    )
}

pub fn selftest(args: &SelftestArgs) -> anyhow::Result<i32> {
    let mut ok = true;

    let mut sphere_best: Vec<f64> = (0..args.seeds as u64)
        .map(|seed| {
            minimize(
                sphere,
                DVector::from_element(10, 3.0),
                2.0,
                seed,
                1e-10,
                500,
            )
        })
        .collect();
    sphere_best.sort_by(f64::total_cmp);
    let median = sphere_best[sphere_best.len() / 2];
    let sphere_ok = median < 1e-10;
    ok &= sphere_ok;
    println!(
        "sphere 10-d: median best {:.2e} over {} seeds .. {}",
        median,
        args.seeds,
        if sphere_ok { "ok" } else { "FAIL" }
    );

    let mut rosen_solved = 0;
    for seed in 0..args.seeds as u64 {
        let best = minimize(rosenbrock, DVector::zeros(5), 0.5, seed, 1e-6, 4000);
        if best < 1e-6 {
            rosen_solved += 1;
        }
    }
    let rosen_ok = 2 * rosen_solved >= args.seeds;
    ok &= rosen_ok;
    println!(
        "rosenbrock 5-d: {}/{} seeds below 1e-6 .. {}",
        rosen_solved,
        args.seeds,
        if rosen_ok { "ok" } else { "FAIL" }
    );

    let plain = strategy_fingerprint(|f| f, 42, 40);
    let affine = strategy_fingerprint(|f| 2.0 * f + 7.0, 42, 40);
    let warped = strategy_fingerprint(f64::exp, 42, 40);
    let rank_ok = plain == affine && plain == warped;
    ok &= rank_ok;
    println!(
        "rank invariance: state bits identical under monotone rescaling .. {}",
        if rank_ok { "ok" } else { "FAIL" }
    );

    let n = 5;
    let params = CmaParams::default_for(n).unwrap();
    let mut state = CmaState::init(params, DVector::zeros(n), 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let pop = state.sample(&mut rng);
        let mut scored: Vec<(f64, DVector<f64>)> =
            pop.into_iter().map(|g| (rosenbrock(&g), g)).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ranked: Vec<DVector<f64>> = scored.into_iter().map(|(_, g)| g).collect();
        state.update(&ranked).unwrap();
    }
    let cov = state.cov().clone();
    let symmetric = (0..n).all(|i| (0..n).all(|j| cov[(i, j)] == cov[(j, i)]));
    state.refresh_eigen();
    let spd = state.condition_number().is_finite() && symmetric;
    ok &= spd;
    println!(
        "covariance after 300 rosenbrock steps: symmetric, condition {:.2e} .. {}",
        state.condition_number(),
        if spd { "ok" } else { "FAIL" }
    );

    Ok(if ok { 0 } else { 1 })
}
