//! Adaptive Gauss–Kronrod quadrature on finite intervals.
//!
//! A 7-point Gauss / 15-point Kronrod pair is applied per panel; panels whose
//! error estimate exceeds the per-panel tolerance are bisected, worst panel
//! first. The error estimate per panel follows the classic QUADPACK rescaling
//! of |K15 − G7|.

use std::collections::BinaryHeap;

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (positive half).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Weights of the 15-point Kronrod rule.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Weights of the embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadOutcome {
    /// Estimate of the integral.
    pub value: f64,
    /// Estimated absolute error, summed over panels.
    pub abs_error: f64,
    /// Number of panels in the final subdivision.
    pub panels: usize,
}

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    /// A panel is accepted once its error estimate drops below this.
    pub panel_tol: f64,
    /// Target for the summed error over all panels.
    pub total_tol: f64,
    /// Hard cap on the number of panels.
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            panel_tol: 1e-12,
            total_tol: 1e-10,
            max_panels: 2048,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// QUADPACK-style error rescaling: sharpens the raw |K - G| difference while
/// keeping a floor at 50 eps times the absolute integral.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

/// One G7/K15 evaluation over [a, b].
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(center);
    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    let mut fv = [0.0f64; 15];
    fv[7] = f_center;

    for (j, &x) in XGK.iter().enumerate().take(7) {
        let abscissa = half * x;
        let f1 = f(center - abscissa);
        let f2 = f(center + abscissa);
        fv[j] = f1;
        fv[14 - j] = f2;
        let sum = f1 + f2;
        res_kronrod += WGK[j] * sum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            // odd Kronrod indices coincide with the Gauss nodes
            res_gauss += WG[j / 2] * sum;
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for (j, &v) in fv.iter().enumerate().take(7) {
        res_asc += WGK[j] * ((v - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let raw_err = (res_kronrod - res_gauss) * half;
    Panel {
        a,
        b,
        value: res_kronrod * half,
        error: rescale_error(raw_err, res_abs * half.abs(), res_asc * half.abs()),
    }
}

/// Integrates `f` over [a, b], bisecting panels until every per-panel error
/// is below `cfg.panel_tol` and the summed error is below `cfg.total_tol`,
/// or `cfg.max_panels` is reached. Never fails: the achieved error is
/// reported in the outcome for the caller to judge.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> QuadOutcome {
    // Seed with a handful of panels so the first error estimates are local.
    const INITIAL_SPLIT: usize = 8;
    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let width = (b - a) / INITIAL_SPLIT as f64;
    for i in 0..INITIAL_SPLIT {
        let lo = a + i as f64 * width;
        let hi = if i + 1 == INITIAL_SPLIT {
            b
        } else {
            lo + width
        };
        heap.push(gk15(&f, lo, hi));
    }

    loop {
        let total_err: f64 = heap.iter().map(|p| p.error).sum();
        let worst = heap.peek().expect("heap never empty");
        let done = worst.error <= cfg.panel_tol && total_err <= cfg.total_tol;
        if done || heap.len() >= cfg.max_panels || (worst.b - worst.a) < 1e-14 {
            let value: f64 = heap.iter().map(|p| p.value).sum();
            return QuadOutcome {
                value,
                abs_error: total_err,
                panels: heap.len(),
            };
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // frozen oracle constants
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // K15 integrates degree <= 22 exactly; x^6 over [0,2] = 128/7.
        let out = integrate(|x| x.powi(6), 0.0, 2.0, &QuadConfig::default());
        assert!((out.value - 128.0 / 7.0).abs() < 1e-12, "got {}", out.value);
    }

    #[test]
    fn standard_normal_density_integrates_to_one() {
        let inv_sqrt_2pi = 0.3989422804014326779;
        let out = integrate(
            |x| inv_sqrt_2pi * (-0.5 * x * x).exp(),
            -12.0,
            12.0,
            &QuadConfig::default(),
        );
        assert!((out.value - 1.0).abs() < 1e-12);
        assert!(out.abs_error < 1e-10);
    }

    #[test]
    fn sharp_peak_forces_subdivision() {
        // Narrow Gaussian bump away from panel boundaries.
        let out = integrate(
            |x| (-((x - 0.3) / 0.1).powi(2)).exp(),
            -12.0,
            12.0,
            &QuadConfig::default(),
        );
        let exact = 0.1 * std::f64::consts::PI.sqrt();
        assert!((out.value - exact).abs() < 1e-10, "got {}", out.value);
        assert!(out.panels > 8);
    }
}
