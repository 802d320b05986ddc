//! Covariance matrix adaptation evolution strategy, written from scratch.
//!
//! Candidates are drawn from a multivariate normal N(m, sigma^2 C). After
//! external evaluation the caller hands back the population sorted by
//! ascending objective value; the update moves the mean to a weighted
//! recombination of the best half, adapts the step size through the
//! conjugate evolution path, and adapts C with rank-one and rank-mu terms.
//! The strategy never sees objective values, only the ordering.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Stall indicator threshold multiplier for the rank-one path update.
const ALPHA_STALL: f64 = 1.5;
/// Condition number beyond which the covariance counts as degenerate.
const CONDITION_LIMIT: f64 = 1e14;
/// Relative scale under which coordinate steps count as no-ops.
const TOL_X: f64 = 1e-12;

/// Errors from strategy construction and updates.
#[derive(Debug)]
pub enum CmaError {
    ZeroDimension,
    LambdaTooSmall { lambda: usize },
    NotEnoughRanked { needed: usize, found: usize },
    DimensionMismatch { expected: usize, found: usize },
}

impl fmt::Display for CmaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmaError::ZeroDimension => write!(f, "dimension must be at least 1"),
            CmaError::LambdaTooSmall { lambda } => {
                write!(f, "population size {lambda} is below the minimum of 2")
            }
            CmaError::NotEnoughRanked { needed, found } => {
                write!(f, "update needs the {needed} best genomes, got {found}")
            }
            CmaError::DimensionMismatch { expected, found } => {
                write!(
                    f,
                    "genome has {found} coordinates, strategy needs {expected}"
                )
            }
        }
    }
}

impl std::error::Error for CmaError {}

/// Default population size for an `n`-dimensional search.
pub fn default_lambda(n: usize) -> usize {
    4 + (3.0 * (n as f64).ln()).floor() as usize
}

/// Strategy constants derived from the dimension and population size.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaParams {
    pub n: usize,
    pub lambda: usize,
    pub mu: usize,
    /// Recombination weights for the `mu` best, positive and summing to 1.
    pub weights: Vec<f64>,
    /// Variance-effective selection mass.
    pub mu_w: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    /// Expected length of an n-dimensional standard normal vector.
    pub chi_n: f64,
}

impl CmaParams {
    pub fn default_for(n: usize) -> Result<Self, CmaError> {
        Self::with_lambda(n, default_lambda(n))
    }

    pub fn with_lambda(n: usize, lambda: usize) -> Result<Self, CmaError> {
        if n == 0 {
            return Err(CmaError::ZeroDimension);
        }
        if lambda < 2 {
            return Err(CmaError::LambdaTooSmall { lambda });
        }
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_w = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_w + 2.0) / (nf + mu_w + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_w - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_w / nf) / (nf + 4.0 + 2.0 * mu_w / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_w);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_w - 2.0 + 1.0 / mu_w) / ((nf + 2.0).powi(2) + mu_w));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Ok(CmaParams {
            n,
            lambda,
            mu,
            weights,
            mu_w,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        })
    }

    /// Generations between eigendecompositions: the cache may drift for
    /// about a tenth of the covariance time constant.
    pub fn eigen_interval(&self) -> u64 {
        let raw = 1.0 / (10.0 * self.n as f64 * (self.c_1 + self.c_mu));
        (raw.floor() as u64).max(1)
    }
}

/// Reasons the search is considered stalled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StagnationSignal {
    NoEffectAxis,
    NoEffectCoord,
    ConditionCov,
    TolX,
    TolStagnation,
}

impl fmt::Display for StagnationSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StagnationSignal::NoEffectAxis => "no-effect-axis",
            StagnationSignal::NoEffectCoord => "no-effect-coord",
            StagnationSignal::ConditionCov => "condition-cov",
            StagnationSignal::TolX => "tol-x",
            StagnationSignal::TolStagnation => "tol-stagnation",
        };
        f.write_str(s)
    }
}

/// Full strategy state. Sampling and updating mutate it in place.
#[derive(Debug, Clone)]
pub struct CmaState {
    params: CmaParams,
    mean: DVector<f64>,
    sigma: f64,
    sigma0: f64,
    cov: DMatrix<f64>,
    path_sigma: DVector<f64>,
    path_c: DVector<f64>,
    /// Eigenvector matrix B of the cached decomposition C = B Dg^2 B^T.
    eigen_basis: DMatrix<f64>,
    /// Square roots of the cached eigenvalues.
    eigen_sqrt: DVector<f64>,
    last_eigen_gen: u64,
    generation: u64,
    evals: u64,
}

impl CmaState {
    /// Fresh state centered on `mean` with isotropic covariance.
    pub fn init(params: CmaParams, mean: DVector<f64>, sigma0: f64) -> Result<Self, CmaError> {
        if mean.len() != params.n {
            return Err(CmaError::DimensionMismatch {
                expected: params.n,
                found: mean.len(),
            });
        }
        let n = params.n;
        Ok(CmaState {
            params,
            mean,
            sigma: sigma0,
            sigma0,
            cov: DMatrix::identity(n, n),
            path_sigma: DVector::zeros(n),
            path_c: DVector::zeros(n),
            eigen_basis: DMatrix::identity(n, n),
            eigen_sqrt: DVector::from_element(n, 1.0),
            last_eigen_gen: 0,
            generation: 0,
            evals: 0,
        })
    }

    pub fn params(&self) -> &CmaParams {
        &self.params
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn path_sigma(&self) -> &DVector<f64> {
        &self.path_sigma
    }

    pub fn path_c(&self) -> &DVector<f64> {
        &self.path_c
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn evals(&self) -> u64 {
        self.evals
    }

    /// Records externally performed objective evaluations.
    pub fn note_evals(&mut self, count: u64) {
        self.evals += count;
    }

    /// Condition number of C from the cached eigenvalues.
    pub fn condition_number(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for &d in self.eigen_sqrt.iter() {
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (hi / lo).powi(2)
    }

    /// Swaps in constants derived for a new population size. The dimension
    /// must not change.
    pub(crate) fn swap_params(&mut self, params: CmaParams) {
        debug_assert_eq!(params.n, self.params.n);
        self.params = params;
    }

    pub(crate) fn set_mean(&mut self, mean: DVector<f64>) {
        debug_assert_eq!(mean.len(), self.params.n);
        self.mean = mean;
    }

    pub(crate) fn set_sigma(&mut self, sigma: f64) {
        self.sigma = sigma;
    }

    /// Resets C to the identity and zeroes both evolution paths. The
    /// eigencache is rebuilt exactly, so no decomposition is needed.
    pub(crate) fn reset_covariance(&mut self) {
        let n = self.params.n;
        self.cov = DMatrix::identity(n, n);
        self.path_sigma = DVector::zeros(n);
        self.path_c = DVector::zeros(n);
        self.eigen_basis = DMatrix::identity(n, n);
        self.eigen_sqrt = DVector::from_element(n, 1.0);
        self.last_eigen_gen = self.generation;
    }

    /// Recomputes the eigendecomposition cache from C.
    pub fn refresh_eigen(&mut self) {
        let sym = nalgebra::SymmetricEigen::new(self.cov.clone());
        self.eigen_basis = sym.eigenvectors;
        self.eigen_sqrt = sym.eigenvalues.map(|ev| ev.max(f64::MIN_POSITIVE).sqrt());
        self.last_eigen_gen = self.generation;
    }

    fn refresh_eigen_if_stale(&mut self) {
        if self.generation - self.last_eigen_gen >= self.params.eigen_interval() {
            self.refresh_eigen();
        }
    }

    /// Draws lambda genomes from N(m, sigma^2 C). Evaluation bookkeeping is
    /// the caller's job; see `note_evals`.
    pub fn sample<R: Rng>(&mut self, rng: &mut R) -> Vec<DVector<f64>> {
        self.refresh_eigen_if_stale();
        let n = self.params.n;
        (0..self.params.lambda)
            .map(|_| {
                let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let y = &self.eigen_basis * z.component_mul(&self.eigen_sqrt);
                &self.mean + self.sigma * y
            })
            .collect()
    }

    /// One strategy update from the population sorted by ascending objective
    /// value. Only the first `mu` genomes are read.
    pub fn update(&mut self, ranked: &[DVector<f64>]) -> Result<(), CmaError> {
        let p = &self.params;
        if ranked.len() < p.mu {
            return Err(CmaError::NotEnoughRanked {
                needed: p.mu,
                found: ranked.len(),
            });
        }
        for g in &ranked[..p.mu] {
            if g.len() != p.n {
                return Err(CmaError::DimensionMismatch {
                    expected: p.n,
                    found: g.len(),
                });
            }
        }

        let mean_old = self.mean.clone();
        let mut mean_new = DVector::zeros(p.n);
        for (w, g) in p.weights.iter().zip(ranked) {
            mean_new += *w * g;
        }
        // Weighted mean step, in sigma-normalized coordinates.
        let step = (&mean_new - &mean_old) / self.sigma;

        // Conjugate path: whiten the step with C^(-1/2) = B Dg^(-1) B^T.
        let whitened = &self.eigen_basis
            * (self.eigen_basis.transpose() * &step).component_div(&self.eigen_sqrt);
        let decay_s = 1.0 - p.c_sigma;
        self.path_sigma = decay_s * &self.path_sigma
            + (1.0 - decay_s * decay_s).sqrt() * p.mu_w.sqrt() * whitened;
        let ps_norm = self.path_sigma.norm();

        // Rank-one path stalls while the sigma path is unusually long.
        let h = if ps_norm <= ALPHA_STALL * (p.n as f64).sqrt() {
            1.0
        } else {
            0.0
        };
        let decay_c = 1.0 - p.c_c;
        self.path_c =
            decay_c * &self.path_c + h * (1.0 - decay_c * decay_c).sqrt() * p.mu_w.sqrt() * &step;
        // Replaces the variance the stalled rank-one term would have added.
        let c_stall = (1.0 - h * h) * p.c_1 * p.c_c * (2.0 - p.c_c);

        let mut rank_mu = DMatrix::zeros(p.n, p.n);
        for (w, g) in p.weights.iter().zip(ranked) {
            let y = (g - &mean_old) / self.sigma;
            rank_mu += *w * &y * y.transpose();
        }
        self.cov = (1.0 - p.c_1 - p.c_mu + c_stall) * &self.cov
            + p.c_1 * &self.path_c * self.path_c.transpose()
            + p.c_mu * rank_mu;
        // Keep C numerically symmetric.
        for i in 0..p.n {
            for j in 0..i {
                let v = 0.5 * (self.cov[(i, j)] + self.cov[(j, i)]);
                self.cov[(i, j)] = v;
                self.cov[(j, i)] = v;
            }
        }

        self.sigma *= ((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0)).exp();
        self.mean = mean_new;
        self.generation += 1;
        Ok(())
    }

    /// Checks the stall detectors. `best_history` is the per-generation
    /// running best objective since the last restart, oldest first.
    pub fn check_stagnation(&self, best_history: &[f64]) -> Option<StagnationSignal> {
        let n = self.params.n;
        // Principal-axis steps that no longer move the mean.
        for i in 0..n {
            let delta = 0.1 * self.sigma * self.eigen_sqrt[i];
            let axis = self.eigen_basis.column(i);
            if (0..n).all(|j| self.mean[j] + delta * axis[j] == self.mean[j]) {
                return Some(StagnationSignal::NoEffectAxis);
            }
        }
        // Coordinate steps that no longer move the mean.
        for i in 0..n {
            let delta = 0.2 * self.sigma * self.cov[(i, i)].sqrt();
            if self.mean[i] + delta == self.mean[i] {
                return Some(StagnationSignal::NoEffectCoord);
            }
        }
        if self.condition_number() > CONDITION_LIMIT {
            return Some(StagnationSignal::ConditionCov);
        }
        let max_std = (0..n)
            .map(|i| self.cov[(i, i)].sqrt())
            .fold(0.0f64, f64::max);
        let pc_inf = self.path_c.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if self.sigma * max_std.max(pc_inf) < TOL_X * self.sigma0 {
            return Some(StagnationSignal::TolX);
        }
        let horizon = 10 + (30 * n as u64).div_ceil(self.params.lambda as u64) as usize;
        if best_history.len() > horizon {
            let now = best_history[best_history.len() - 1];
            let then = best_history[best_history.len() - 1 - horizon];
            if now == then {
                return Some(StagnationSignal::TolStagnation);
            }
        }
        None
    }
}

/// One per-generation trace record.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub generation: u64,
    pub sigma: f64,
    pub cond_c: f64,
    pub mean_norm: f64,
    pub best_f: f64,
    pub eval_count: u64,
}

impl TraceRow {
    pub fn header(with_mean: bool, n: usize) -> String {
        let mut s = String::from("gen,sigma,cond_c,m_norm,best_f,eval_count");
        if with_mean {
            for i in 0..n {
                s.push_str(&format!(",m_{i}"));
            }
        }
        s
    }

    pub fn from_state(state: &CmaState, best_f: f64) -> Self {
        TraceRow {
            generation: state.generation(),
            sigma: state.sigma(),
            cond_c: state.condition_number(),
            mean_norm: state.mean().norm(),
            best_f,
            eval_count: state.evals(),
        }
    }

    pub fn format(&self, mean: Option<&DVector<f64>>) -> String {
        let mut s = format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            self.generation, self.sigma, self.cond_c, self.mean_norm, self.best_f, self.eval_count
        );
        if let Some(m) = mean {
            for v in m.iter() {
                s.push_str(&format!(",{v:.17e}"));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

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

    /// Ranks a population by an objective, ascending, ties in sample order.
    fn rank_by<F: Fn(&DVector<f64>) -> f64>(pop: Vec<DVector<f64>>, f: F) -> Vec<DVector<f64>> {
        let mut scored: Vec<(f64, DVector<f64>)> = pop.into_iter().map(|g| (f(&g), g)).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        scored.into_iter().map(|(_, g)| g).collect()
    }

    fn run<F: Fn(&DVector<f64>) -> f64 + Copy>(
        state: &mut CmaState,
        rng: &mut ChaCha8Rng,
        f: F,
        gens: usize,
    ) -> f64 {
        let mut best = f64::INFINITY;
        for _ in 0..gens {
            let pop = state.sample(rng);
            state.note_evals(pop.len() as u64);
            for g in &pop {
                best = best.min(f(g));
            }
            let ranked = rank_by(pop, f);
            state.update(&ranked).unwrap();
        }
        best
    }

    #[test]
    fn default_params_at_n10() {
        let p = CmaParams::default_for(10).unwrap();
        assert_eq!(p.lambda, 10);
        assert_eq!(p.mu, 5);
        assert_eq!(p.weights.len(), 5);
        let sum: f64 = p.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for w in p.weights.windows(2) {
            assert!(w[0] > w[1]);
        }
        assert!(p.weights.iter().all(|&w| w > 0.0));
        // Frozen from the defining formulas evaluated by hand.
        assert!((p.mu_w - 3.1673).abs() < 1e-3, "mu_w = {}", p.mu_w);
        assert!((p.chi_n - 3.0847).abs() < 1e-3, "chi_n = {}", p.chi_n);
        assert!(p.c_1 > 0.0 && p.c_1 < 1.0);
        assert!(p.c_mu > 0.0 && p.c_mu <= 1.0 - p.c_1);
        assert!(p.c_sigma > 0.0 && p.c_sigma < 1.0);
        assert!(p.d_sigma >= 1.0);
        assert!(p.c_c > 0.0 && p.c_c < 1.0);
    }

    #[test]
    fn lambda_grows_logarithmically() {
        assert_eq!(default_lambda(1), 4);
        assert_eq!(default_lambda(4), 8);
        assert_eq!(default_lambda(10), 10);
        assert_eq!(default_lambda(41), 15);
    }

    #[test]
    fn bad_construction_is_rejected() {
        assert!(matches!(
            CmaParams::default_for(0),
            Err(CmaError::ZeroDimension)
        ));
        assert!(matches!(
            CmaParams::with_lambda(3, 1),
            Err(CmaError::LambdaTooSmall { lambda: 1 })
        ));
        let p = CmaParams::default_for(3).unwrap();
        assert!(matches!(
            CmaState::init(p.clone(), DVector::zeros(2), 1.0),
            Err(CmaError::DimensionMismatch {
                expected: 3,
                found: 2
            })
        ));
        let mut state = CmaState::init(p, DVector::zeros(3), 1.0).unwrap();
        assert!(matches!(
            state.update(&[DVector::zeros(3)]),
            Err(CmaError::NotEnoughRanked { .. })
        ));
    }

    #[test]
    fn initial_samples_match_requested_distribution() {
        let n = 5;
        let m0 = DVector::from_fn(n, |i, _| i as f64 + 1.0);
        let sigma0 = 2.0;
        let p = CmaParams::with_lambda(n, 10_000).unwrap();
        let mut state = CmaState::init(p, m0.clone(), sigma0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pop = state.sample(&mut rng);
        let count = pop.len() as f64;
        let mut mean = DVector::zeros(n);
        for g in &pop {
            mean += g;
        }
        mean /= count;
        for i in 0..n {
            assert!((mean[i] - m0[i]).abs() < 0.1, "mean[{i}] = {}", mean[i]);
        }
        let mut cov = DMatrix::zeros(n, n);
        for g in &pop {
            let d = g - &mean;
            cov += &d * d.transpose();
        }
        cov /= count - 1.0;
        let want = sigma0 * sigma0;
        for i in 0..n {
            assert!(
                (cov[(i, i)] - want).abs() < 0.1 * want,
                "cov[{i},{i}] = {}",
                cov[(i, i)]
            );
            for j in 0..i {
                assert!(
                    cov[(i, j)].abs() < 0.15 * want,
                    "cov[{i},{j}] = {}",
                    cov[(i, j)]
                );
            }
        }
    }

    /// Kolmogorov-Smirnov p-value for a sample against the standard normal.
    fn ks_p_value(mut z: Vec<f64>) -> f64 {
        z.sort_by(f64::total_cmp);
        let n = z.len() as f64;
        let mut d = 0.0f64;
        for (i, &v) in z.iter().enumerate() {
            let cdf = crate::mapping::phi(v);
            d = d.max((cdf - i as f64 / n).abs());
            d = d.max(((i as f64 + 1.0) / n - cdf).abs());
        }
        let t = d * (n.sqrt() + 0.12 + 0.11 / n.sqrt());
        // Asymptotic Kolmogorov survival function.
        let mut q = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            q += 2.0 * (-1.0f64).powi(k + 1) * (-2.0 * kf * kf * t * t).exp();
        }
        q.clamp(0.0, 1.0)
    }

    #[test]
    fn marginals_pass_ks_against_standard_normal() {
        let n = 3;
        let p = CmaParams::with_lambda(n, 10_000).unwrap();
        let mut state = CmaState::init(p, DVector::zeros(n), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pop = state.sample(&mut rng);
        for i in 0..n {
            let z: Vec<f64> = pop.iter().map(|g| g[i]).collect();
            let p_val = ks_p_value(z);
            assert!(p_val > 0.01, "coordinate {i} failed KS: p = {p_val}");
        }
    }

    #[test]
    fn sphere_update_moves_mean_closer_in_most_trials() {
        let n = 5;
        let mut closer = 0;
        for seed in 0..100 {
            let p = CmaParams::default_for(n).unwrap();
            let m0 = DVector::from_element(n, 5.0);
            let mut state = CmaState::init(p, m0.clone(), 1.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pop = state.sample(&mut rng);
            let ranked = rank_by(pop, sphere);
            state.update(&ranked).unwrap();
            if state.mean().norm() < m0.norm() {
                closer += 1;
            }
        }
        assert!(
            closer >= 95,
            "mean moved closer in only {closer}/100 trials"
        );
    }

    #[test]
    fn sigma_rises_on_linear_objective() {
        let n = 5;
        let p = CmaParams::default_for(n).unwrap();
        let mut state = CmaState::init(p, DVector::zeros(n), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let pop = state.sample(&mut rng);
            let ranked = rank_by(pop, |x| x[0]);
            state.update(&ranked).unwrap();
        }
        assert!(state.sigma() > 1.0, "sigma = {}", state.sigma());
    }

    #[test]
    fn covariance_stays_spd_on_rosenbrock() {
        let n = 5;
        let p = CmaParams::default_for(n).unwrap();
        let mut state = CmaState::init(p, DVector::zeros(n), 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let pop = state.sample(&mut rng);
            let ranked = rank_by(pop, rosenbrock);
            state.update(&ranked).unwrap();
        }
        state.refresh_eigen();
        let sym = nalgebra::SymmetricEigen::new(state.cov().clone());
        for ev in sym.eigenvalues.iter() {
            assert!(*ev > 0.0, "non-positive eigenvalue {ev}");
        }
        // Cache reconstructs C.
        let d2 = DMatrix::from_diagonal(&state.eigen_sqrt.map(|d| d * d));
        let rebuilt = &state.eigen_basis * d2 * state.eigen_basis.transpose();
        let scale = state.cov().norm();
        assert!((rebuilt - state.cov()).norm() <= 1e-8 * scale);
    }

    #[test]
    fn sphere_converges_within_budget() {
        let n = 10;
        let p = CmaParams::default_for(n).unwrap();
        let mut state = CmaState::init(p, DVector::from_element(n, 3.0), 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let best = run(&mut state, &mut rng, sphere, 500);
        assert!(best < 1e-10, "best sphere value {best}");
        assert!(state.evals() <= 5000);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let p = CmaParams::default_for(4).unwrap();
        let mut a = CmaState::init(p.clone(), DVector::zeros(4), 1.0).unwrap();
        let mut b = CmaState::init(p, DVector::zeros(4), 1.0).unwrap();
        let pop_a = a.sample(&mut ChaCha8Rng::seed_from_u64(9));
        let pop_b = b.sample(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(pop_a, pop_b);
    }

    #[test]
    fn rank_only_dependence_is_bitwise() {
        let n = 6;
        let p = CmaParams::default_for(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut base = CmaState::init(p, DVector::from_element(n, 1.0), 1.0).unwrap();
        let pop = base.sample(&mut rng);
        let mut twin = base.clone();
        let ranked_raw = rank_by(pop.clone(), sphere);
        let ranked_affine = rank_by(pop.clone(), |x| 2.0 * sphere(x) + 7.0);
        let ranked_exp = rank_by(pop, |x| sphere(x).exp());
        base.update(&ranked_raw).unwrap();
        let mut twin2 = twin.clone();
        twin.update(&ranked_affine).unwrap();
        twin2.update(&ranked_exp).unwrap();
        assert_eq!(base.mean(), twin.mean());
        assert_eq!(base.cov(), twin.cov());
        assert_eq!(base.sigma().to_bits(), twin.sigma().to_bits());
        assert_eq!(base.mean(), twin2.mean());
        assert_eq!(base.cov(), twin2.cov());
        assert_eq!(base.sigma().to_bits(), twin2.sigma().to_bits());
    }

    #[test]
    fn stagnation_detectors_fire() {
        let n = 3;
        let p = CmaParams::default_for(n).unwrap();

        // TolX: step size collapsed relative to sigma0.
        let mut state = CmaState::init(p.clone(), DVector::zeros(n), 1.0).unwrap();
        state.sigma = 1e-14;
        assert_eq!(state.check_stagnation(&[]), Some(StagnationSignal::TolX));

        // ConditionCov: eigenvalue spread beyond 1e14.
        let mut state = CmaState::init(p.clone(), DVector::zeros(n), 1.0).unwrap();
        state.cov[(0, 0)] = 1e15;
        state.refresh_eigen();
        assert_eq!(
            state.check_stagnation(&[]),
            Some(StagnationSignal::ConditionCov)
        );

        // NoEffectCoord: one coordinate of the mean is too large for
        // coordinate-size steps. The eigenbasis is rotated so every
        // principal axis still moves the second coordinate, keeping
        // NoEffectAxis quiet.
        let p2 = CmaParams::default_for(2).unwrap();
        let mut state = CmaState::init(p2, DVector::zeros(2), 1.0).unwrap();
        state.mean = DVector::from_vec(vec![1e12, 0.0]);
        state.sigma = 1e-6;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        state.eigen_basis = DMatrix::from_row_slice(2, 2, &[r, -r, r, r]);
        assert_eq!(
            state.check_stagnation(&[]),
            Some(StagnationSignal::NoEffectCoord)
        );

        // NoEffectAxis: one principal axis degenerated while coordinate
        // steps still move (covariance stays near identity diagonally).
        let mut state = CmaState::init(p.clone(), DVector::from_element(n, 1e8), 1.0).unwrap();
        state.eigen_sqrt[1] = 1e-9;
        assert_eq!(
            state.check_stagnation(&[]),
            Some(StagnationSignal::NoEffectAxis)
        );

        // TolStagnation: flat best for longer than the horizon.
        let state = CmaState::init(p, DVector::zeros(n), 1.0).unwrap();
        let horizon = 10 + (30 * n as u64).div_ceil(state.params().lambda as u64) as usize;
        let flat = vec![4.0; horizon + 1];
        assert_eq!(
            state.check_stagnation(&flat),
            Some(StagnationSignal::TolStagnation)
        );
        let mut improving: Vec<f64> = (0..=horizon).map(|i| -(i as f64)).collect();
        assert_eq!(state.check_stagnation(&improving), None);
        improving.truncate(3);
        assert_eq!(state.check_stagnation(&improving), None);
    }

    #[test]
    fn eigen_interval_is_at_least_one() {
        for n in [1, 2, 10, 41, 164] {
            let p = CmaParams::default_for(n).unwrap();
            assert!(p.eigen_interval() >= 1, "n = {n}");
        }
        // Small dimensions refresh every generation.
        assert_eq!(CmaParams::default_for(10).unwrap().eigen_interval(), 1);
    }

    #[test]
    fn trace_row_reflects_state() {
        let p = CmaParams::default_for(3).unwrap();
        let mut state = CmaState::init(p, DVector::from_element(3, 2.0), 1.5).unwrap();
        state.note_evals(12);
        let row = TraceRow::from_state(&state, 9.25);
        assert_eq!(row.generation, 0);
        assert_eq!(row.eval_count, 12);
        assert!((row.mean_norm - (12.0f64).sqrt()).abs() < 1e-12);
        let line = row.format(None);
        assert!(line.starts_with("0,"));
        assert_eq!(line.split(',').count(), 6);
        let line = row.format(Some(state.mean()));
        assert_eq!(line.split(',').count(), 9);
    }
}
