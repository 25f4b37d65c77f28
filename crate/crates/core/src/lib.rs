//! Exact simulation and closed-form analysis of the (1,λ)-CSA-ES on
//! affine-linear functions.
//!
//! The crate is organized around four building blocks:
//!
//! * [`order_stats`] — high-accuracy moments `E[N_{i:λ}^k]` of normal order
//!   statistics, computed by adaptive quadrature and cross-checkable against
//!   sampling.
//! * [`rates`] — closed-form geometric divergence rates of `ln σ_t` and the
//!   variance of the one-step log step-size change, with and without
//!   cumulation.
//! * [`es_core`] — the step-by-step (1,λ)-ES with cumulative step-size
//!   adaptation on `f(x) = x₁` (optionally composed with a strictly
//!   increasing transformation), plus the scalar Z-chain used for the
//!   divergence of the parent's first coordinate.
//! * [`experiments`] — a reproducible, seed-parallel Monte-Carlo harness that
//!   estimates rates, stationary variances and quantile trajectories and
//!   compares them against the closed forms.
//!
//! All randomness flows through per-run substreams of a counter-based
//! generator (see [`rng`]), so every result is a deterministic function of
//! the base seed, independent of worker scheduling.

pub mod es_core;
pub mod experiments;
pub mod order_stats;
pub mod quad;
pub mod rates;
pub mod rng;

pub use es_core::{EsState, SelectedStep, ZChainState};
pub use experiments::{QuantileTable, RateEstimate, TrajectoryBatch};
pub use order_stats::OrderStatMoment;
pub use rates::{AlgorithmParams, CPolicy, RateReport, RelStd, VarianceBreakdown};
