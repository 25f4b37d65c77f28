//! Acceptance suite: every headline claim checked at desk scale, one test
//! per criterion, each printing a PASS/FAIL line (run with --nocapture to
//! see them all).
//!
//! Criteria 10b and 10c pin an alpha = 1/3 critical policy and an
//! alpha = 1/4 growth exponent of 0.125. Those targets belong to the
//! long-run (time-averaged) variability of ln sigma, not to the one-step
//! variance this library computes: the one-step rel-std provably has its
//! critical policy at alpha = 1/2 (with the same limit constant) and grows
//! with exponent (1-2*alpha)/2 = 0.25. The two tests assert the stated
//! targets anyway and are kept red deliberately; `validate`'s scaling
//! check covers the behavior-true variants.

use csa_core::es_core;
use csa_core::experiments::{self, BatchOptions, SamplingMode};
use csa_core::order_stats;
use csa_core::rates::{self, AlgorithmParams, CPolicy};
use csa_core::rng::substream;

fn report(criterion: &str, pass: bool, detail: &str) -> bool {
    println!(
        "[{}] criterion {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn params(lambda: u32, n: usize, c: f64, seed: u64) -> AlgorithmParams {
    AlgorithmParams::new(lambda, n, c, 1.0, seed).unwrap()
}

fn full_batch(
    p: &AlgorithmParams,
    runs: usize,
    steps: usize,
    record_x: bool,
) -> experiments::TrajectoryBatch {
    experiments::run_batch_with(
        p,
        runs,
        steps,
        &BatchOptions {
            mode: SamplingMode::Full,
            record_x,
            ..BatchOptions::default()
        },
    )
    .unwrap()
}

#[test]
fn acceptance_01_order_statistic_recurrence() {
    let mut worst: f64 = 0.0;
    for lambda in 2..=32 {
        for power in 1..=4 {
            let r = order_stats::recurrence_residual(lambda, power).unwrap();
            worst = worst.max(r.abs());
        }
    }
    let pass = report(
        "1 (recurrence)",
        worst <= 1e-8,
        &format!("worst |residual| = {worst:.3e} (tol 1e-8)"),
    );
    assert!(pass);
}

#[test]
fn acceptance_02_moment_monotonicity() {
    let e11 = order_stats::moment(1, 1, 2).unwrap().value;
    let e12 = order_stats::moment(1, 2, 2).unwrap().value;
    let mut pass = (e11 - 1.0).abs() <= 1e-10 && (e12 - 1.0).abs() <= 1e-10;
    let mut prev = e12;
    for lambda in 3..=65 {
        let cur = order_stats::moment(1, lambda, 2).unwrap().value;
        pass &= cur > prev;
        prev = cur;
    }
    let pass = report(
        "2 (monotonicity)",
        pass,
        &format!("E[N^2] strictly increasing up to lambda = 65; anchors {e11:.12}, {e12:.12}"),
    );
    assert!(pass);
}

#[test]
fn acceptance_03_no_cumulation_rate() {
    let mut pass = true;
    let mut detail = String::new();
    for (i, (lambda, n)) in [(3u32, 5usize), (8, 20)].iter().enumerate() {
        let p = params(*lambda, *n, 1.0, 0xC3A0 + i as u64);
        let batch = full_batch(&p, 1000, 2000, false);
        let est = experiments::estimate_rate(&batch).unwrap();
        detail.push_str(&format!(
            "({lambda},{n}): slope {:.6} vs {:.6}, z = {:+.2}; ",
            est.mean_slope, est.theoretical, est.z_score
        ));
        pass &= est.z_score.abs() <= 3.0;
    }
    assert!(report("3 (no-cumulation rate)", pass, &detail));
}

#[test]
fn acceptance_04_random_walk_regime() {
    let mut pass = true;
    let mut detail = String::new();
    for (i, lambda) in [1u32, 2].iter().enumerate() {
        let p = params(*lambda, 20, 1.0, 0xC4A0 + i as u64);
        let batch = full_batch(&p, 1000, 2000, false);
        let est = experiments::estimate_rate(&batch).unwrap();
        detail.push_str(&format!("lambda={lambda}: slope z = {:+.2}; ", est.z_score));
        pass &= est.z_score.abs() <= 3.0;
    }
    // lambda = 1 one-step increments: W ~ (chi^2_n/n - 1)/2, mean 0 and
    // variance 1/(2n).
    let p = params(1, 20, 1.0, 0xC4A2);
    let est = experiments::estimate_step_variance(&p, 10, 200_000).unwrap();
    let mean_z = est.empirical_mean / (est.empirical_variance / est.samples as f64).sqrt();
    let var_rel = est.empirical_variance / 0.025 - 1.0;
    detail.push_str(&format!(
        "lambda=1 increments: mean z = {mean_z:+.2}, var rel err {:+.2}%",
        var_rel * 100.0
    ));
    pass &= mean_z.abs() <= 3.0 && var_rel.abs() <= 0.05;
    assert!(report("4 (random walk)", pass, &detail));
}

#[test]
fn acceptance_05_cumulation_rate() {
    let c20 = 1.0 / 20f64.sqrt();
    let mut pass = true;
    let mut detail = String::new();
    for (i, (lambda, n, c)) in [(8u32, 20usize, c20), (2, 10, 0.5)].iter().enumerate() {
        let p = params(*lambda, *n, *c, 0xC5A0 + i as u64);
        let batch = full_batch(&p, 1000, 3000, false);
        let est = experiments::estimate_rate(&batch).unwrap();
        detail.push_str(&format!(
            "({lambda},{n},c={c:.4}): slope {:.6} vs {:.6}, z = {:+.2}; ",
            est.mean_slope, est.theoretical, est.z_score
        ));
        pass &= est.z_score.abs() <= 3.0;
    }
    // Closed form at lambda = 2 equals (1-c)/n * E[N_{1:2}]^2 (d_sigma = 1).
    let p2 = params(2, 10, 0.5, 0);
    let rate = rates::rate_with_cumulation(&p2).unwrap();
    let e1 = order_stats::moment(1, 2, 1).unwrap().value;
    let direct = (1.0 - p2.c) / p2.n as f64 * e1 * e1;
    let gap = (rate - direct).abs();
    detail.push_str(&format!("lambda=2 closed-form gap {gap:.2e}"));
    pass &= gap <= 1e-12;
    assert!(report("5 (cumulation rate)", pass, &detail));
}

#[test]
fn acceptance_06_c1_reduction_identity() {
    let lambdas = [1u32, 2, 3, 4, 6, 8, 12, 16, 24, 32];
    let ns = [
        1usize, 2, 3, 5, 8, 10, 20, 30, 50, 80, 100, 200, 500, 800, 1000, 2000, 4000, 6000, 8000,
        10000,
    ];
    let mut worst: f64 = 0.0;
    for &lambda in &lambdas {
        for &n in &ns {
            let p = params(lambda, n, 1.0, 0);
            let gap = (rates::rate_with_cumulation(&p).unwrap()
                - rates::rate_no_cumulation(&p).unwrap())
            .abs();
            worst = worst.max(gap);
        }
    }
    let pass = report(
        "6 (c = 1 reduction)",
        worst <= 1e-12,
        &format!(
            "worst |rate_with - rate_no| = {worst:.2e} over {} points",
            lambdas.len() * ns.len()
        ),
    );
    assert!(pass);
}

#[test]
fn acceptance_07_step_variance() {
    let c20 = 1.0 / 20f64.sqrt();
    let mut pass = true;
    let mut detail = String::new();
    for (i, c) in [1.0, c20].iter().enumerate() {
        let p = params(8, 20, *c, 0xC7A0 + i as u64);
        let burn = experiments::default_burn_in(*c);
        let est = experiments::estimate_step_variance(&p, burn, 400_000).unwrap();
        let rel = est.empirical_variance / est.theoretical_variance - 1.0;
        detail.push_str(&format!(
            "c={c:.4}: {:.6e} vs {:.6e} ({:+.2}%); ",
            est.empirical_variance,
            est.theoretical_variance,
            rel * 100.0
        ));
        pass &= rel.abs() <= 0.05;
    }
    let anchor = rates::log_step_variance(&params(1, 20, 1.0, 0))
        .unwrap()
        .variance;
    detail.push_str(&format!("lambda=1 anchor = {anchor} (exact 0.025)"));
    pass &= (anchor - 0.025).abs() <= 1e-12;
    assert!(report("7 (step variance)", pass, &detail));
}

#[test]
fn acceptance_08_path_moment_limits() {
    let p = params(8, 20, 1.0 / 20f64.sqrt(), 0xC8A0);
    let burn = experiments::default_burn_in(p.c);
    let est = experiments::estimate_path_moments(&p, burn, 1_000_000).unwrap();
    let m2 = rates::path_second_moment_limit(p.lambda, p.c).unwrap();
    let m4 = rates::path_fourth_moment_limit(p.lambda, p.c)
        .unwrap()
        .limit;
    let rel2 = est.second / m2 - 1.0;
    let rel4 = est.fourth / m4 - 1.0;
    let pass = report(
        "8 (path moments)",
        rel2.abs() <= 0.02 && rel4.abs() <= 0.02,
        &format!(
            "E[p^2]: {:.4} vs {m2:.4} ({:+.2}%); E[p^4]: {:.2} vs {m4:.2} ({:+.2}%)",
            est.second,
            rel2 * 100.0,
            est.fourth,
            rel4 * 100.0
        ),
    );
    assert!(pass);
}

#[test]
fn acceptance_09_x_divergence() {
    let p = params(8, 20, 1.0, 0xC9A0);
    let batch = full_batch(&p, 1000, 2000, true);
    let est = experiments::estimate_x_rate(&batch).unwrap();
    let pass = report(
        "9 (x divergence)",
        est.z_score.abs() <= 3.0,
        &format!(
            "ln|x| slope {:.6} vs sigma rate {:.6}, z = {:+.2} ({} runs)",
            est.mean_slope, est.theoretical, est.z_score, est.runs_used
        ),
    );
    assert!(pass);
}

fn loglog_slope(policy: &CPolicy) -> f64 {
    let curve = rates::rel_std_curve(8, 1.0, policy, &[10_000, 1_000_000]).unwrap();
    (curve[1].1.as_f64() / curve[0].1.as_f64()).ln() / 100f64.ln()
}

#[test]
fn acceptance_10a_scaling_constant_c() {
    let slope = loglog_slope(&CPolicy::Constant(1.0));
    let pass = report(
        "10a (rel-std, constant c)",
        (slope - 0.5).abs() <= 0.02,
        &format!("log-log slope over n in [1e4, 1e6] = {slope:.4} (want 0.5 +- 0.02)"),
    );
    assert!(pass);
}

#[test]
fn acceptance_10b_scaling_alpha_third() {
    // As stated: alpha = 1/3 at n = 1e6 within 5% of 1/(sqrt(2) E[N_{1:8}]^2).
    // The implemented one-step rel-std instead reaches that constant under
    // alpha = 1/2 and grows like n^{1/6} here, so this stays red.
    let e1 = order_stats::moment(1, 8, 1).unwrap().value;
    let limit = 1.0 / (2f64.sqrt() * e1 * e1);
    let value = rates::rel_std_curve(8, 1.0, &CPolicy::Alpha(1.0 / 3.0), &[1_000_000]).unwrap()[0]
        .1
        .as_f64();
    let rel = value / limit - 1.0;
    let pass = report(
        "10b (rel-std, alpha = 1/3)",
        rel.abs() <= 0.05,
        &format!("value at n=1e6 = {value:.4} vs 1/(sqrt2 E^2) = {limit:.4} (rel {rel:+.2e})"),
    );
    assert!(
        pass,
        "alpha=1/3 value {value:.4} is {rel:+.2e} away from {limit:.4}; the one-step \
         variance curves reach this constant at alpha = 1/2 instead (see validate's \
         rel_std_scaling check)"
    );
}

#[test]
fn acceptance_10c_scaling_alpha_quarter() {
    // As stated: log-log slope 0.125 +- 0.02 for alpha = 1/4. The implemented
    // curves grow with exponent (1-2*alpha)/2 = 0.25, so this stays red.
    let slope = loglog_slope(&CPolicy::Alpha(0.25));
    let pass = report(
        "10c (rel-std, alpha = 1/4)",
        (slope - 0.125).abs() <= 0.02,
        &format!("log-log slope = {slope:.4} (stated target 0.125 +- 0.02)"),
    );
    assert!(
        pass,
        "alpha=1/4 slope is {slope:.4}, not 0.125; the implemented one-step rel-std \
         grows with exponent (1-2*alpha)/2 = 0.25"
    );
}

#[test]
fn acceptance_11_transform_invariance() {
    // Seed 26 keeps all offspring scores inside exp's faithful range over
    // this horizon (underflow to 0.0 would manufacture ties).
    let p = params(8, 20, 1.0 / 20f64.sqrt(), 26);
    let mut plain = es_core::init_state(&p, &mut substream(p.seed, 0));
    let mut transformed = plain.clone();
    let mut rng_a = substream(p.seed, 1);
    let mut rng_b = substream(p.seed, 1);
    let g = |y: f64| (y - 2.0).exp();
    let mut pass = true;
    for _ in 0..40 {
        let sa = es_core::step(&mut plain, &p, &mut rng_a, None);
        let sb = es_core::step(&mut transformed, &p, &mut rng_b, Some(&g));
        pass &= sa.selected_index == sb.selected_index;
        pass &= sa.xi == sb.xi && sa.eta == sb.eta;
    }
    pass &= plain == transformed;
    let pass = report(
        "11 (invariance)",
        pass,
        "f(x)=x1 vs exp(x1-2): identical selected indices and bitwise-equal states over 40 steps",
    );
    assert!(pass);
}

#[test]
fn acceptance_12_cli_determinism() {
    use std::process::Command;
    let tmp = tempfile::tempdir().unwrap();
    let render = |tag: &str, workers: &str| {
        let path = tmp.path().join(format!("{tag}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_csa-lab"))
            .args([
                "simulate",
                "--runs",
                "200",
                "--steps",
                "300",
                "--seed",
                "4242",
                "--workers",
                workers,
                "--out",
                path.to_str().unwrap(),
            ])
            .status()
            .expect("spawn csa-lab");
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    let w1a = render("w1a", "1");
    let w8 = render("w8", "8");
    let w1b = render("w1b", "1");
    let pass = report(
        "12 (CLI determinism)",
        w1a == w8 && w1a == w1b,
        &format!(
            "{} bytes identical across reruns and workers 1 vs 8",
            w1a.len()
        ),
    );
    assert!(pass);
}
