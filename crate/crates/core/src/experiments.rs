//! Reproducible Monte-Carlo harness: trajectory batches, empirical quantile
//! tables, and rate/variance estimates compared against the closed forms.
//!
//! Every run draws from its own substream `(seed, run_index)`, runs execute
//! in parallel, and all aggregation happens in run-index order, so results
//! are byte-identical across reruns and across worker counts.

use rayon::prelude::*;
use thiserror::Error;

use crate::es_core::{self, EsState};
use crate::rates::{self, AlgorithmParams, CPolicy, ParamError, RateError, RelStd};
use crate::rng::substream;

/// Quantile levels used by default for fan charts: 10^-i and 1 - 10^-i
/// for i = 1..4, plus the median.
pub const DEFAULT_LEVELS: [f64; 9] = [1e-4, 1e-3, 1e-2, 1e-1, 0.5, 0.9, 0.99, 0.999, 0.9999];

/// Default cap on recorded matrix elements (~256 MiB of f64); the default
/// fan-chart batch of 5001 x 5001 fits.
pub const DEFAULT_MAX_ELEMENTS: usize = 1 << 25;

/// Substream index reserved for reservoir-sampling decisions; run indices
/// stay well below this.
const RESERVOIR_STREAM: u64 = u64::MAX;

/// How the selected step is produced each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Simulate all λ offspring and run the tournament.
    Full,
    /// Draw the winner directly as (N_{1:λ}, N(0,1), ...); ≈λ× faster.
    Marginal,
}

#[derive(Debug, Clone, Copy)]
pub struct BatchOptions {
    pub mode: SamplingMode,
    pub record_x: bool,
    /// Budget on runs × (steps+1) × recorded matrices.
    pub max_elements: usize,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            mode: SamplingMode::Marginal,
            record_x: false,
            max_elements: DEFAULT_MAX_ELEMENTS,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error("batch needs {required} matrix elements, budget is {budget}")]
    ResourceBudget { required: usize, budget: usize },
    #[error("batch needs runs >= 1 and steps >= 1")]
    EmptyBatch,
    #[error("{steps} steps leave a path transient; need at least {needed} for (1-c)^steps < 1e-6")]
    TransientTooShort { steps: usize, needed: usize },
    #[error("at least two runs are required for a standard error, got {runs}")]
    InsufficientRuns { runs: usize },
    #[error("quantile level {level} outside (0, 1)")]
    LevelOutOfRange { level: f64 },
    #[error("batch was recorded without x trajectories")]
    MissingXRecord,
    #[error("x-rate estimation is defined for c = 1 only, got c = {c}")]
    CumulationOutOfScope { c: f64 },
}

/// Dense row-major runs × (steps+1) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMatrix {
    data: Vec<f64>,
    cols: usize,
}

impl RunMatrix {
    fn zeroed(rows: usize, cols: usize) -> Self {
        Self {
            data: vec![0.0; rows * cols],
            cols,
        }
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.cols).unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// Recorded `ln(σ_t/σ_0)` (and optionally `ln|x_{t,1}/x_{0,1}|`) for a set
/// of independent runs. Column 0 is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub params: AlgorithmParams,
    pub runs: usize,
    pub steps: usize,
    pub log_sigma: RunMatrix,
    pub log_absx: Option<RunMatrix>,
}

/// Empirical quantile curves, one row per level, columns indexed by t.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    pub levels: Vec<f64>,
    pub values: RunMatrix,
}

/// A Monte-Carlo slope estimate next to its closed-form counterpart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub mean_slope: f64,
    pub std_error: f64,
    pub theoretical: f64,
    pub z_score: f64,
    /// Runs entering the statistic (NaN-guarded runs are dropped).
    pub runs_used: usize,
}

/// Empirical vs closed-form variance of the one-step log change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepVarianceEstimate {
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    pub theoretical_variance: f64,
    pub samples: usize,
}

/// Empirical stationary path moments of the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathMomentEstimate {
    pub second: f64,
    pub fourth: f64,
    pub samples: usize,
}

/// One row of a rel-std sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub policy: String,
    pub n: usize,
    pub rel_std: RelStd,
}

/// Burn-in after which the path transient (1-c)^t is negligible: ⌈10/c⌉.
pub fn default_burn_in(c: f64) -> usize {
    (10.0 / c).ceil() as usize
}

fn fill_run(
    params: &AlgorithmParams,
    run_index: u64,
    steps: usize,
    mode: SamplingMode,
    sigma_row: &mut [f64],
    x_row: Option<&mut [f64]>,
) {
    let mut rng = substream(params.seed, run_index);
    let mut state: EsState = es_core::init_state(params, &mut rng);
    let x0 = state.x[0];
    let mut cum = 0.0;
    sigma_row[0] = 0.0;
    let mut x_row = x_row;
    if let Some(row) = x_row.as_deref_mut() {
        row[0] = 0.0;
    }
    for t in 1..=steps {
        let sel = match mode {
            SamplingMode::Full => es_core::step(&mut state, params, &mut rng, None),
            SamplingMode::Marginal => es_core::step_marginal(&mut state, params, &mut rng),
        };
        cum += sel.eta.ln();
        sigma_row[t] = cum;
        if let Some(row) = x_row.as_deref_mut() {
            // Underflow to exactly zero (or overflow) would make the log
            // blow up; record a NaN sentinel instead, excluded downstream.
            let ratio = (state.x[0] / x0).abs();
            row[t] = if ratio > 0.0 && ratio.is_finite() {
                ratio.ln()
            } else {
                f64::NAN
            };
        }
    }
}

/// Runs `runs` independent trajectories and records per-step
/// `ln(σ_t/σ_0)`, deterministically in `params.seed`.
pub fn run_batch_with(
    params: &AlgorithmParams,
    runs: usize,
    steps: usize,
    opts: &BatchOptions,
) -> Result<TrajectoryBatch, ExperimentError> {
    params.validate()?;
    if runs == 0 || steps == 0 {
        return Err(ExperimentError::EmptyBatch);
    }
    let cols = steps + 1;
    let matrices = if opts.record_x { 2 } else { 1 };
    let required = runs
        .checked_mul(cols)
        .and_then(|v| v.checked_mul(matrices))
        .ok_or(ExperimentError::ResourceBudget {
            required: usize::MAX,
            budget: opts.max_elements,
        })?;
    if required > opts.max_elements {
        return Err(ExperimentError::ResourceBudget {
            required,
            budget: opts.max_elements,
        });
    }

    let mut log_sigma = RunMatrix::zeroed(runs, cols);
    let mut log_absx = opts.record_x.then(|| RunMatrix::zeroed(runs, cols));

    match log_absx.as_mut() {
        Some(xm) => {
            log_sigma
                .data
                .par_chunks_mut(cols)
                .zip(xm.data.par_chunks_mut(cols))
                .enumerate()
                .for_each(|(r, (srow, xrow))| {
                    fill_run(params, r as u64, steps, opts.mode, srow, Some(xrow));
                });
        }
        None => {
            log_sigma
                .data
                .par_chunks_mut(cols)
                .enumerate()
                .for_each(|(r, srow)| {
                    fill_run(params, r as u64, steps, opts.mode, srow, None);
                });
        }
    }

    Ok(TrajectoryBatch {
        params: *params,
        runs,
        steps,
        log_sigma,
        log_absx,
    })
}

/// [`run_batch_with`] under default options (marginal sampling, no x
/// recording unless asked, default memory budget).
pub fn run_batch(
    params: &AlgorithmParams,
    runs: usize,
    steps: usize,
    record_x: bool,
) -> Result<TrajectoryBatch, ExperimentError> {
    run_batch_with(
        params,
        runs,
        steps,
        &BatchOptions {
            record_x,
            ..BatchOptions::default()
        },
    )
}

fn validate_levels(levels: &[f64]) -> Result<(), ExperimentError> {
    for &q in levels {
        if !(q > 0.0 && q < 1.0) {
            return Err(ExperimentError::LevelOutOfRange { level: q });
        }
    }
    Ok(())
}

/// Linear interpolation between adjacent order statistics: position
/// q (m-1) in the sorted sample. Extreme levels on moderate sample sizes
/// land between the first two (or last two) order statistics.
fn interpolate_sorted(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    debug_assert!(m > 0);
    if m == 1 {
        return sorted[0];
    }
    let h = q * (m - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn quantiles_from_columns<F>(
    column: F,
    cols: usize,
    sample_len: usize,
    levels: &[f64],
) -> QuantileTable
where
    F: Fn(usize, &mut Vec<f64>) + Sync,
{
    let per_t: Vec<Vec<f64>> = (0..cols)
        .into_par_iter()
        .map(|t| {
            let mut buf = Vec::with_capacity(sample_len);
            column(t, &mut buf);
            buf.sort_by(f64::total_cmp);
            levels
                .iter()
                .map(|&q| interpolate_sorted(&buf, q))
                .collect()
        })
        .collect();

    let mut values = RunMatrix::zeroed(levels.len(), cols);
    for (t, row) in per_t.iter().enumerate() {
        for (l, &v) in row.iter().enumerate() {
            values.data[l * cols + t] = v;
        }
    }
    QuantileTable {
        levels: levels.to_vec(),
        values,
    }
}

/// Per-time-step empirical quantiles of `ln(σ_t/σ_0)` across the batch.
pub fn quantiles(
    batch: &TrajectoryBatch,
    levels: &[f64],
) -> Result<QuantileTable, ExperimentError> {
    validate_levels(levels)?;
    let cols = batch.steps + 1;
    Ok(quantiles_from_columns(
        |t, buf| {
            buf.extend((0..batch.runs).map(|r| batch.log_sigma.get(r, t)));
        },
        cols,
        batch.runs,
        levels,
    ))
}

/// Quantile table straight from parameters. Within the memory budget this
/// equals `quantiles(run_batch(..))`; above it, runs stream through a
/// per-time-step reservoir (capacity derived from the budget, replacement
/// decisions from a dedicated substream), keeping the output deterministic
/// and independent of worker count at the price of sampling error in the
/// quantiles.
pub fn simulate_quantiles(
    params: &AlgorithmParams,
    runs: usize,
    steps: usize,
    levels: &[f64],
    opts: &BatchOptions,
) -> Result<QuantileTable, ExperimentError> {
    validate_levels(levels)?;
    let cols = steps + 1;
    if runs
        .checked_mul(cols)
        .is_some_and(|r| r <= opts.max_elements)
    {
        let batch = run_batch_with(
            params,
            runs,
            steps,
            &BatchOptions {
                record_x: false,
                ..*opts
            },
        )?;
        return quantiles(&batch, levels);
    }

    params.validate()?;
    if runs == 0 || steps == 0 {
        return Err(ExperimentError::EmptyBatch);
    }
    let capacity = (opts.max_elements / cols).max(64).min(runs);
    let mut reservoirs: Vec<Vec<f64>> = vec![Vec::with_capacity(capacity); cols];
    let mut decisions = substream(params.seed, RESERVOIR_STREAM);

    // Trajectories are computed chunk-parallel but fed strictly in run
    // order, so the reservoir contents do not depend on scheduling.
    const CHUNK: usize = 64;
    let mut seen = 0usize;
    let mut start = 0usize;
    while start < runs {
        let count = CHUNK.min(runs - start);
        let chunk: Vec<Vec<f64>> = (start..start + count)
            .into_par_iter()
            .map(|r| {
                let mut row = vec![0.0; cols];
                fill_run(params, r as u64, steps, opts.mode, &mut row, None);
                row
            })
            .collect();
        for row in &chunk {
            seen += 1;
            for (t, &v) in row.iter().enumerate() {
                let res = &mut reservoirs[t];
                if res.len() < capacity {
                    res.push(v);
                } else {
                    use rand::Rng;
                    let j = decisions.gen_range(0..seen);
                    if j < capacity {
                        res[j] = v;
                    }
                }
            }
        }
        start += count;
    }

    Ok(quantiles_from_columns(
        |t, buf| buf.extend_from_slice(&reservoirs[t]),
        cols,
        capacity,
        levels,
    ))
}

fn transient_gate(c: f64, steps: usize) -> Result<(), ExperimentError> {
    let residue = (1.0 - c).powi(steps as i32);
    if residue >= 1e-6 {
        let needed = ((1e-6f64).ln() / (1.0 - c).ln()).ceil() as usize;
        return Err(ExperimentError::TransientTooShort { steps, needed });
    }
    Ok(())
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Endpoint estimate of `lim (1/t) ln(σ_t/σ_0)`: per-run
/// `log_sigma[r][T]/T`, averaged across runs, against
/// [`rates::rate_with_cumulation`]. The per-run statistic is unbiased for
/// the limit once the path transient has decayed, hence the
/// `(1-c)^steps < 1e-6` gate.
pub fn estimate_rate(batch: &TrajectoryBatch) -> Result<RateEstimate, ExperimentError> {
    transient_gate(batch.params.c, batch.steps)?;
    if batch.runs < 2 {
        return Err(ExperimentError::InsufficientRuns { runs: batch.runs });
    }
    let t = batch.steps as f64;
    let slopes: Vec<f64> = (0..batch.runs)
        .map(|r| batch.log_sigma.get(r, batch.steps) / t)
        .collect();
    let (mean_slope, std_error) = mean_se(&slopes);
    let theoretical = rates::rate_with_cumulation(&batch.params)?;
    Ok(RateEstimate {
        mean_slope,
        std_error,
        theoretical,
        z_score: (mean_slope - theoretical) / std_error,
        runs_used: batch.runs,
    })
}

/// Slope of `ln|x_{t,1}/x_{0,1}|` against [`rates::rate_no_cumulation`]
/// (c = 1 only; the X-chain analysis with cumulation is out of scope).
///
/// Uses the difference statistic `(y_T - y_{T/2}) / (T - T/2)` rather than
/// `y_T / T`: writing `ln|x_T| ≈ ln σ_{T-1} + ln|Z_{T-1}|`, the endpoint
/// form carries the stationary level `E[ln|Z|]/T` as bias (measured ≈ 3.9
/// for λ = 8, n = 20 — several standard errors at desk scale), which the
/// difference over the second half cancels. NaN-guarded runs are dropped.
pub fn estimate_x_rate(batch: &TrajectoryBatch) -> Result<RateEstimate, ExperimentError> {
    if batch.params.c < 1.0 {
        return Err(ExperimentError::CumulationOutOfScope { c: batch.params.c });
    }
    let xs = batch
        .log_absx
        .as_ref()
        .ok_or(ExperimentError::MissingXRecord)?;
    let start = batch.steps / 2;
    let window = (batch.steps - start) as f64;
    let slopes: Vec<f64> = (0..batch.runs)
        .filter_map(|r| {
            let a = xs.get(r, start);
            let b = xs.get(r, batch.steps);
            (a.is_finite() && b.is_finite()).then(|| (b - a) / window)
        })
        .collect();
    if slopes.len() < 2 {
        return Err(ExperimentError::InsufficientRuns { runs: slopes.len() });
    }
    let (mean_slope, std_error) = mean_se(&slopes);
    let theoretical = rates::rate_no_cumulation(&batch.params)?;
    Ok(RateEstimate {
        mean_slope,
        std_error,
        theoretical,
        z_score: (mean_slope - theoretical) / std_error,
        runs_used: slopes.len(),
    })
}

const VARIANCE_RUNS: usize = 32;

/// Empirical variance (and mean) of one-step increments `ln(σ_{t+1}/σ_t)`
/// collected after `burn_in` across 32 independent substreams, next to the
/// closed-form [`rates::log_step_variance`].
pub fn estimate_step_variance(
    params: &AlgorithmParams,
    burn_in: usize,
    samples: usize,
) -> Result<StepVarianceEstimate, ExperimentError> {
    params.validate()?;
    if samples == 0 {
        return Err(ExperimentError::EmptyBatch);
    }
    let per_run = samples.div_ceil(VARIANCE_RUNS);
    let partials: Vec<(f64, f64, usize)> = (0..VARIANCE_RUNS as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(params.seed, r);
            let mut state = es_core::init_state(params, &mut rng);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for t in 0..burn_in + per_run {
                let sel = es_core::step_marginal(&mut state, params, &mut rng);
                if t >= burn_in {
                    let w = sel.eta.ln();
                    sum += w;
                    sumsq += w * w;
                }
            }
            (sum, sumsq, per_run)
        })
        .collect();

    let (mut sum, mut sumsq, mut count) = (0.0, 0.0, 0usize);
    for (s, s2, c) in partials {
        sum += s;
        sumsq += s2;
        count += c;
    }
    let m = count as f64;
    let mean = sum / m;
    let variance = (sumsq / m - mean * mean) * m / (m - 1.0);
    Ok(StepVarianceEstimate {
        empirical_mean: mean,
        empirical_variance: variance,
        theoretical_variance: rates::log_step_variance(params)?.variance,
        samples: count,
    })
}

/// Empirical stationary `E[p₁²]` and `E[p₁⁴]` from the first-coordinate
/// path recursion `p' = (1-c) p + √(c(2-c)) N_{1:λ}` (the other coordinates
/// are independent of p₁ and never enter these moments).
pub fn estimate_path_moments(
    params: &AlgorithmParams,
    burn_in: usize,
    samples: usize,
) -> Result<PathMomentEstimate, ExperimentError> {
    params.validate()?;
    if samples == 0 {
        return Err(ExperimentError::EmptyBatch);
    }
    let per_run = samples.div_ceil(VARIANCE_RUNS);
    let c = params.c;
    let decay = 1.0 - c;
    let boost = (c * (2.0 - c)).sqrt();
    let partials: Vec<(f64, f64, usize)> = (0..VARIANCE_RUNS as u64)
        .into_par_iter()
        .map(|r| {
            use rand_distr::StandardNormal;
            let mut rng = substream(params.seed, r);
            let mut p: f64 = rand::Rng::sample(&mut rng, StandardNormal);
            let mut sum2 = 0.0;
            let mut sum4 = 0.0;
            for t in 0..burn_in + per_run {
                let xi = crate::order_stats::sample_min(params.lambda, &mut rng);
                p = decay * p + boost * xi;
                if t >= burn_in {
                    let p2 = p * p;
                    sum2 += p2;
                    sum4 += p2 * p2;
                }
            }
            (sum2, sum4, per_run)
        })
        .collect();

    let (mut sum2, mut sum4, mut count) = (0.0, 0.0, 0usize);
    for (s2, s4, c) in partials {
        sum2 += s2;
        sum4 += s4;
        count += c;
    }
    Ok(PathMomentEstimate {
        second: sum2 / count as f64,
        fourth: sum4 / count as f64,
        samples: count,
    })
}

/// Closed-form rel-std table over policies × n grid (no simulation).
pub fn rel_std_sweep(
    lambda: u32,
    d_sigma: f64,
    policies: &[CPolicy],
    n_grid: &[usize],
) -> Result<Vec<SweepRow>, ExperimentError> {
    let mut rows = Vec::with_capacity(policies.len() * n_grid.len());
    for policy in policies {
        let curve = rates::rel_std_curve(lambda, d_sigma, policy, n_grid)?;
        for (n, rel_std) in curve {
            rows.push(SweepRow {
                policy: policy.to_string(),
                n,
                rel_std,
            });
        }
    }
    Ok(rows)
}
