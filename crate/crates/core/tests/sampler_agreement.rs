//! Monte-Carlo sampler vs quadrature: the two independent routes to
//! E[N_{1:λ}^k] must agree within sampling error.

use csa_core::order_stats::{moment, sample_min};
use csa_core::rng::substream;

/// 10^7 draws of N_{1:λ}; empirical k-th moments and their standard errors.
fn empirical_moments(lambda: u32, seed: u64) -> [(f64, f64); 4] {
    const SAMPLES: usize = 10_000_000;
    let mut rng = substream(seed, 0);
    let mut sums = [0.0f64; 8]; // powers 1..8 for SE of powers 1..4
    for _ in 0..SAMPLES {
        let v = sample_min(lambda, &mut rng);
        let mut p = 1.0;
        for s in sums.iter_mut() {
            p *= v;
            *s += p;
        }
    }
    let m = SAMPLES as f64;
    let raw: Vec<f64> = sums.iter().map(|s| s / m).collect();
    let mut out = [(0.0, 0.0); 4];
    for k in 1..=4 {
        let mean = raw[k - 1];
        let var = (raw[2 * k - 1] - mean * mean).max(0.0);
        out[k - 1] = (mean, (var / m).sqrt());
    }
    out
}

fn assert_within(lambda: u32, observed: [(f64, f64); 4]) {
    for (k, (mean, se)) in observed.iter().enumerate() {
        let k = (k + 1) as u32;
        let expected = moment(1, lambda, k).unwrap().value;
        let z = (mean - expected) / se;
        assert!(
            z.abs() <= 4.0,
            "lambda={lambda} k={k}: sampler {mean} vs quadrature {expected} (z = {z:.2})"
        );
    }
}

#[test]
fn sampler_matches_quadrature_lambda_two() {
    assert_within(2, empirical_moments(2, 0xA5));
}

#[test]
fn sampler_matches_quadrature_lambda_eight() {
    assert_within(8, empirical_moments(8, 0xB6));
}

#[test]
fn single_draw_second_moment_is_one() {
    let m = empirical_moments(1, 0xC7);
    let (second, se) = m[1];
    assert!(
        (second - 1.0).abs() <= 4.0 * se,
        "second moment {second} (se {se})"
    );
}
