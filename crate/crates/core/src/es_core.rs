//! Step-by-step (1,λ)-CSA-ES on the linear function `f(x) = x₁`.
//!
//! One iteration from state `(x, σ, p)`:
//!
//! 1. sample λ i.i.d. standard normal vectors ξ_i,
//! 2. select the one minimizing `g(x₁ + σ ξ_{i,1})` for a strictly
//!    increasing `g` (ties, a measure-zero event, go to the lowest index),
//! 3. `p' = (1-c) p + √(c(2-c)) ξ*`,
//! 4. `σ' = σ exp((c/(2 d_σ)) (‖p'‖²/n - 1))`,
//! 5. `x' = x + σ ξ*`.
//!
//! Selection only ever compares first coordinates, so the selected step is
//! distributed as `(N_{1:λ}, N(0,1), …, N(0,1))`, i.i.d. over time. That
//! gives the *marginal* sampling mode: draw the winner directly instead of
//! simulating all λ offspring (≈λ× fewer draws). Both modes simulate the
//! same chain in distribution; the full mode exists so that invariance under
//! increasing transformations and the selection distribution itself can be
//! exercised for real.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::order_stats::{self, sample_min};
use crate::rates::AlgorithmParams;

/// Markov state of one CSA-ES instance: `(X_t, σ_t, p_t)` plus the
/// iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct EsState {
    /// Parent point, length n.
    pub x: Vec<f64>,
    /// Step-size, strictly positive.
    pub sigma: f64,
    /// Cumulative path, length n.
    pub path: Vec<f64>,
    /// Iteration counter.
    pub t: u64,
}

/// The selected standard step and the step-size multiplier it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedStep {
    /// ξ*_t, the winning standard normal vector.
    pub xi: Vec<f64>,
    /// η*_t = exp((c/(2 d_σ)) (‖p_{t+1}‖²/n - 1)), applied to σ.
    pub eta: f64,
    /// Winning offspring index; `None` in marginal mode, where no explicit
    /// tournament happens.
    pub selected_index: Option<usize>,
}

/// State of the scalar chain `Z_t = (x_{t+1,1} - x_{0,1})/σ_t` used for the
/// divergence of the parent's first coordinate (defined for c = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZChainState {
    pub z: f64,
}

impl Default for ZChainState {
    /// Z_{-1} = 0.
    fn default() -> Self {
        Self { z: 0.0 }
    }
}

/// Fresh state: x = (1, 0, …, 0), σ = 1, p ~ N(0, I_n), t = 0.
///
/// The nonzero first coordinate keeps `ln|x_{t,1}/x_{0,1}|` defined from the
/// start; translation invariance of the selection makes the choice
/// immaterial to every estimated rate.
pub fn init_state<R: Rng + ?Sized>(params: &AlgorithmParams, rng: &mut R) -> EsState {
    let mut x = vec![0.0; params.n];
    x[0] = 1.0;
    let path = (0..params.n).map(|_| rng.sample(StandardNormal)).collect();
    EsState {
        x,
        sigma: 1.0,
        path,
        t: 0,
    }
}

fn apply_selected(
    state: &mut EsState,
    params: &AlgorithmParams,
    xi: Vec<f64>,
    selected_index: Option<usize>,
) -> SelectedStep {
    let n = params.n as f64;
    let c = params.c;
    let decay = 1.0 - c;
    let boost = (c * (2.0 - c)).sqrt();

    let mut norm_sq = 0.0;
    for (p, &s) in state.path.iter_mut().zip(xi.iter()) {
        *p = decay * *p + boost * s;
        norm_sq += *p * *p;
    }
    let eta = (c / (2.0 * params.d_sigma) * (norm_sq / n - 1.0)).exp();

    for (x, &s) in state.x.iter_mut().zip(xi.iter()) {
        *x += state.sigma * s;
    }
    state.sigma *= eta;
    state.t += 1;

    SelectedStep {
        xi,
        eta,
        selected_index,
    }
}

/// One iteration in full mode: simulates all λ offspring and selects by
/// comparing objective values. `transform`, when given, is composed with
/// `f(x) = x₁` before comparison; any strictly increasing map leaves the
/// selected index (and hence the whole trajectory) unchanged.
pub fn step<R: Rng + ?Sized>(
    state: &mut EsState,
    params: &AlgorithmParams,
    rng: &mut R,
    transform: Option<&dyn Fn(f64) -> f64>,
) -> SelectedStep {
    debug_assert_eq!(state.x.len(), params.n);
    let lambda = params.lambda as usize;
    let n = params.n;

    // All offspring are drawn up front so the stream consumption does not
    // depend on which one wins.
    let mut offspring = vec![0.0f64; lambda * n];
    for v in offspring.iter_mut() {
        *v = rng.sample(StandardNormal);
    }

    let score = |first: f64| -> f64 {
        let y = state.x[0] + state.sigma * first;
        match transform {
            Some(g) => g(y),
            None => y,
        }
    };

    let mut best = 0usize;
    let mut best_score = score(offspring[0]);
    for i in 1..lambda {
        let s = score(offspring[i * n]);
        if s < best_score {
            best = i;
            best_score = s;
        }
    }

    let xi = offspring[best * n..(best + 1) * n].to_vec();
    apply_selected(state, params, xi, Some(best))
}

/// One iteration in marginal mode: the selected step is drawn directly as
/// `(N_{1:λ}, N(0,1), …, N(0,1))`.
pub fn step_marginal<R: Rng + ?Sized>(
    state: &mut EsState,
    params: &AlgorithmParams,
    rng: &mut R,
) -> SelectedStep {
    debug_assert_eq!(state.x.len(), params.n);
    let mut xi = vec![0.0f64; params.n];
    xi[0] = sample_min(params.lambda, rng);
    for v in xi.iter_mut().skip(1) {
        *v = rng.sample(StandardNormal);
    }
    apply_selected(state, params, xi, None)
}

/// One transition of the Z-chain (c = 1): draws a selected step ξ* through
/// the marginal shortcut, computes η*(ξ*) and returns `z/η* + ξ*₁`.
pub fn z_step<R: Rng + ?Sized>(
    zstate: &ZChainState,
    lambda: u32,
    n: usize,
    d_sigma: f64,
    rng: &mut R,
) -> ZChainState {
    let first = sample_min(lambda, rng);
    let mut norm_sq = first * first;
    for _ in 1..n {
        let v: f64 = rng.sample(StandardNormal);
        norm_sq += v * v;
    }
    let eta = ((norm_sq / n as f64 - 1.0) / (2.0 * d_sigma)).exp();
    ZChainState {
        z: zstate.z / eta + first,
    }
}

/// Summary of an empirical check of the selected-step distribution.
#[derive(Debug, Clone, Copy)]
pub struct DistributionCheck {
    pub lambda: u32,
    pub samples: usize,
    /// Empirical mean and second moment of ξ*₁.
    pub first_mean: f64,
    pub first_second_moment: f64,
    /// Quadrature values they should match.
    pub expected_first_mean: f64,
    pub expected_first_second_moment: f64,
    /// Empirical mean and variance pooled over coordinates j ≥ 2.
    pub rest_mean: f64,
    pub rest_variance: f64,
    /// Standard errors of the empirical first-coordinate statistics.
    pub first_mean_se: f64,
    pub first_second_moment_se: f64,
    pub rest_mean_se: f64,
}

/// Runs the full tournament `samples` times (n = 3, enough to expose both a
/// selected and unselected coordinates) and summarizes the empirical moments
/// of ξ*₁ against `order_stats::moment(1, λ, k)`, k = 1, 2, and of the
/// unselected coordinates against N(0, 1).
pub fn selected_first_coordinate_distribution_check<R: Rng + ?Sized>(
    lambda: u32,
    samples: usize,
    rng: &mut R,
) -> DistributionCheck {
    let n = 3usize;
    let params = AlgorithmParams {
        lambda,
        n,
        c: 1.0,
        d_sigma: 1.0,
        seed: 0,
    };

    let mut first_sum = 0.0;
    let mut first_sq = 0.0;
    let mut first_fourth = 0.0;
    let mut rest_sum = 0.0;
    let mut rest_sq = 0.0;
    let mut state = init_state(&params, rng);
    for _ in 0..samples {
        let sel = step(&mut state, &params, rng, None);
        let f = sel.xi[0];
        first_sum += f;
        first_sq += f * f;
        first_fourth += f * f * f * f;
        for &v in &sel.xi[1..] {
            rest_sum += v;
            rest_sq += v * v;
        }
        // Keep the tournament scores bounded; selection compares first
        // coordinates only, so re-centering x changes nothing.
        state.x[0] = 0.0;
        state.sigma = 1.0;
    }

    let m = samples as f64;
    let rest_count = (samples * (n - 1)) as f64;
    let first_mean = first_sum / m;
    let first_second_moment = first_sq / m;
    let first_var = (first_second_moment - first_mean * first_mean).max(0.0);
    let second_var = (first_fourth / m - first_second_moment * first_second_moment).max(0.0);
    let rest_mean = rest_sum / rest_count;
    let rest_variance = rest_sq / rest_count - rest_mean * rest_mean;

    DistributionCheck {
        lambda,
        samples,
        first_mean,
        first_second_moment,
        expected_first_mean: order_stats::moment(1, lambda, 1)
            .expect("lambda validated by params")
            .value,
        expected_first_second_moment: order_stats::moment(1, lambda, 2)
            .expect("lambda validated by params")
            .value,
        rest_mean,
        rest_variance,
        first_mean_se: (first_var / m).sqrt(),
        first_second_moment_se: (second_var / m).sqrt(),
        rest_mean_se: (rest_variance / rest_count).sqrt(),
    }
}

/// `ln(σ_{t+1}/σ_t)` implied by the path just after an update; equals
/// `ln η*`.
pub fn log_sigma_increment(params: &AlgorithmParams, path: &[f64]) -> f64 {
    let norm_sq: f64 = path.iter().map(|p| p * p).sum();
    params.c / (2.0 * params.d_sigma) * (norm_sq / params.n as f64 - 1.0)
}
