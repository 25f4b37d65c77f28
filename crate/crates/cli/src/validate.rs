//! The statistical validation suite behind `csa-lab validate`: closed-form
//! identities checked exactly, Monte-Carlo agreement checked through
//! z-scores and relative tolerances at desk scale.

use csa_core::es_core;
use csa_core::experiments::{self, BatchOptions, SamplingMode};
use csa_core::order_stats;
use csa_core::rates::{self, AlgorithmParams, CPolicy};
use csa_core::rng::substream;

use crate::output;

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub struct ValidateOptions {
    pub quick: bool,
    pub seed: u64,
    /// Test hook: multiplies d_sigma inside theoretical formulas only, so a
    /// correct simulator visibly disagrees with the (wrong) theory.
    pub perturb_dsigma: f64,
}

struct Suite {
    opts: ValidateOptions,
    results: Vec<CheckResult>,
}

impl Suite {
    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.results.push(CheckResult {
            name,
            passed,
            detail,
        });
    }

    /// Parameters as the theory side sees them (perturbable).
    fn theory(&self, p: &AlgorithmParams) -> AlgorithmParams {
        AlgorithmParams {
            d_sigma: p.d_sigma * self.opts.perturb_dsigma,
            ..*p
        }
    }

    fn params(&self, lambda: u32, n: usize, c: f64, salt: u64) -> AlgorithmParams {
        AlgorithmParams {
            lambda,
            n,
            c,
            d_sigma: 1.0,
            seed: self.opts.seed.wrapping_add(salt),
        }
    }

    fn check_recurrence(&mut self) {
        let lambdas: Vec<u32> = if self.opts.quick {
            vec![2, 3, 5, 8, 16, 32]
        } else {
            (2..=32).collect()
        };
        let mut worst: f64 = 0.0;
        for &lambda in &lambdas {
            for power in 1..=4 {
                match order_stats::recurrence_residual(lambda, power) {
                    Ok(r) => worst = worst.max(r.abs()),
                    Err(e) => {
                        self.push("moment_recurrence", false, format!("lambda={lambda}: {e}"));
                        return;
                    }
                }
            }
        }
        self.push(
            "moment_recurrence",
            worst <= 1e-8,
            format!("worst |residual| = {worst:.2e} over lambda in {{2..32}}, k in {{1..4}}"),
        );
    }

    fn check_monotonicity(&mut self) {
        let mut ok = true;
        let mut detail = String::new();
        let anchor1 = order_stats::moment(1, 1, 2).unwrap().value;
        let anchor2 = order_stats::moment(1, 2, 2).unwrap().value;
        if (anchor1 - 1.0).abs() > 1e-10 || (anchor2 - 1.0).abs() > 1e-10 {
            ok = false;
            detail = format!("E[N_1:1^2] = {anchor1}, E[N_1:2^2] = {anchor2}");
        }
        let mut prev = anchor2;
        for lambda in 3..=65 {
            let cur = order_stats::moment(1, lambda, 2).unwrap().value;
            if cur <= prev {
                ok = false;
                detail = format!("E[N_1:{lambda}^2] = {cur} <= {prev}");
                break;
            }
            prev = cur;
        }
        if ok {
            detail = "second moment strictly increasing for lambda = 2..65; anchors exact".into();
        }
        self.push("moment_monotonicity", ok, detail);
    }

    fn rate_z(&self, p: &AlgorithmParams, runs: usize, steps: usize) -> (f64, f64, f64) {
        let batch = experiments::run_batch(p, runs, steps, false).expect("batch within budget");
        let est = experiments::estimate_rate(&batch).expect("transient gate satisfied");
        let theory = rates::rate_with_cumulation(&self.theory(p)).unwrap();
        let z = (est.mean_slope - theory) / est.std_error;
        (est.mean_slope, theory, z)
    }

    fn check_rate_no_cumulation(&mut self) {
        let (runs, steps) = if self.opts.quick {
            (300, 800)
        } else {
            (1000, 2000)
        };
        let mut detail = String::new();
        let mut ok = true;
        for (i, (lambda, n)) in [(3u32, 5usize), (8, 20)].iter().enumerate() {
            let p = self.params(*lambda, *n, 1.0, 100 + i as u64);
            let (mean, theory, z) = self.rate_z(&p, runs, steps);
            detail.push_str(&format!(
                "({lambda},{n}): slope {mean:.6} vs {theory:.6} (z = {z:+.2}); "
            ));
            ok &= z.abs() <= 3.0;
        }
        self.push("rate_no_cumulation", ok, detail);
    }

    fn check_random_walk(&mut self) {
        let (runs, steps) = if self.opts.quick {
            (300, 800)
        } else {
            (1000, 2000)
        };
        let mut ok = true;
        let mut detail = String::new();
        for (i, lambda) in [1u32, 2].iter().enumerate() {
            let p = self.params(*lambda, 20, 1.0, 200 + i as u64);
            let batch = experiments::run_batch(&p, runs, steps, false).unwrap();
            let est = experiments::estimate_rate(&batch).unwrap();
            let theory = rates::rate_with_cumulation(&self.theory(&p)).unwrap();
            let z = (est.mean_slope - theory) / est.std_error;
            detail.push_str(&format!("lambda={lambda}: slope z = {z:+.2}; "));
            ok &= z.abs() <= 3.0;
        }
        // lambda = 1 one-step increments follow (chi^2_n/n - 1)/2: mean 0,
        // variance 1/(2n).
        let p = self.params(1, 20, 1.0, 210);
        let samples = if self.opts.quick { 100_000 } else { 200_000 };
        let est = experiments::estimate_step_variance(&p, 10, samples).unwrap();
        let tp = self.theory(&p);
        let var_theory = 1.0 / (2.0 * tp.d_sigma * tp.d_sigma * tp.n as f64);
        let mean_se = (est.empirical_variance / est.samples as f64).sqrt();
        let mean_z = est.empirical_mean / mean_se;
        let var_rel = est.empirical_variance / var_theory - 1.0;
        detail.push_str(&format!(
            "lambda=1 increments: mean z = {mean_z:+.2}, var rel err = {:.2}%",
            var_rel * 100.0
        ));
        ok &= mean_z.abs() <= 3.0 && var_rel.abs() <= 0.05;
        self.push("random_walk_regime", ok, detail);
    }

    fn check_rate_with_cumulation(&mut self) {
        let (runs, steps) = if self.opts.quick {
            (400, 2000)
        } else {
            (1000, 3000)
        };
        let mut ok = true;
        let mut detail = String::new();
        let c20 = 1.0 / 20f64.sqrt();
        for (i, (lambda, n, c)) in [(8u32, 20usize, c20), (2, 10, 0.5)].iter().enumerate() {
            let p = self.params(*lambda, *n, *c, 310 + i as u64);
            let (mean, theory, z) = self.rate_z(&p, runs, steps);
            detail.push_str(&format!(
                "({lambda},{n},c={c:.4}): slope {mean:.6} vs {theory:.6} (z = {z:+.2}); "
            ));
            ok &= z.abs() <= 3.0;
        }
        // Closed-form identity for lambda = 2: rate = (1-c)/(d n) E[N_{1:2}]^2.
        let p2 = self.params(2, 10, 0.5, 0);
        let rate = rates::rate_with_cumulation(&p2).unwrap();
        let e1 = order_stats::moment(1, 2, 1).unwrap().value;
        let direct = (1.0 - p2.c) / (p2.d_sigma * p2.n as f64) * e1 * e1;
        let gap = (rate - direct).abs();
        detail.push_str(&format!("lambda=2 identity gap = {gap:.2e}"));
        ok &= gap <= 1e-12;
        self.push("rate_with_cumulation", ok, detail);
    }

    fn check_c1_reduction(&mut self) {
        let lambdas = [1u32, 2, 3, 4, 6, 8, 12, 16, 24, 32];
        let ns = [
            1usize, 2, 3, 5, 8, 10, 20, 30, 50, 80, 100, 200, 500, 800, 1000, 2000, 4000, 6000,
            8000, 10000,
        ];
        let mut worst: f64 = 0.0;
        for &lambda in &lambdas {
            for &n in &ns {
                let p = AlgorithmParams {
                    lambda,
                    n,
                    c: 1.0,
                    d_sigma: 1.0,
                    seed: 0,
                };
                let a = rates::rate_with_cumulation(&p).unwrap();
                let b = rates::rate_no_cumulation(&p).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
        self.push(
            "c1_reduction_identity",
            worst <= 1e-12,
            format!("worst gap {worst:.2e} over a 200-point grid"),
        );
    }

    fn check_step_variance(&mut self) {
        let samples = if self.opts.quick { 120_000 } else { 400_000 };
        let c20 = 1.0 / 20f64.sqrt();
        let mut ok = true;
        let mut detail = String::new();
        for (i, c) in [1.0, c20].iter().enumerate() {
            let p = self.params(8, 20, *c, 400 + i as u64);
            let burn = experiments::default_burn_in(*c);
            let est = experiments::estimate_step_variance(&p, burn, samples).unwrap();
            let theory = rates::log_step_variance(&self.theory(&p)).unwrap().variance;
            let rel = est.empirical_variance / theory - 1.0;
            detail.push_str(&format!("c={c:.4}: var rel err {:+.2}%; ", rel * 100.0));
            ok &= rel.abs() <= 0.05;
        }
        // Analytic anchor: lambda = 1, c = 1, n = 20 gives exactly 1/(2n).
        let anchor = rates::log_step_variance(&AlgorithmParams {
            lambda: 1,
            n: 20,
            c: 1.0,
            d_sigma: 1.0,
            seed: 0,
        })
        .unwrap()
        .variance;
        let gap = (anchor - 0.025).abs();
        detail.push_str(&format!("lambda=1 anchor gap {gap:.2e}"));
        ok &= gap <= 1e-12;
        self.push("step_variance", ok, detail);
    }

    fn check_path_moments(&mut self) {
        let p = self.params(8, 20, 1.0 / 20f64.sqrt(), 500);
        let burn = experiments::default_burn_in(p.c);
        let est = experiments::estimate_path_moments(&p, burn, 1_000_000).unwrap();
        let m2 = rates::path_second_moment_limit(p.lambda, p.c).unwrap();
        let m4 = rates::path_fourth_moment_limit(p.lambda, p.c)
            .unwrap()
            .limit;
        let rel2 = est.second / m2 - 1.0;
        let rel4 = est.fourth / m4 - 1.0;
        let ok = rel2.abs() <= 0.02 && rel4.abs() <= 0.02;
        self.push(
            "path_moment_limits",
            ok,
            format!(
                "E[p^2] rel err {:+.2}%, E[p^4] rel err {:+.2}%",
                rel2 * 100.0,
                rel4 * 100.0
            ),
        );
    }

    fn check_x_divergence(&mut self) {
        let (runs, steps) = if self.opts.quick {
            (300, 1000)
        } else {
            (1000, 2000)
        };
        let p = self.params(8, 20, 1.0, 600);
        let batch = experiments::run_batch(&p, runs, steps, true).unwrap();
        let est = experiments::estimate_x_rate(&batch).unwrap();
        let theory = rates::rate_no_cumulation(&self.theory(&p)).unwrap();
        let z = (est.mean_slope - theory) / est.std_error;
        self.push(
            "x_divergence",
            z.abs() <= 3.0,
            format!(
                "slope {:.6} vs {theory:.6} (z = {z:+.2}, {} runs)",
                est.mean_slope, est.runs_used
            ),
        );
    }

    fn loglog_slope(policy: &CPolicy) -> f64 {
        let grid = [10_000usize, 1_000_000];
        let curve = rates::rel_std_curve(8, 1.0, policy, &grid).unwrap();
        (curve[1].1.as_f64() / curve[0].1.as_f64()).ln() / (100f64).ln()
    }

    fn check_scaling(&mut self) {
        // Constant c: rel std grows like sqrt(n).
        let slope_const = Self::loglog_slope(&CPolicy::Constant(1.0));
        let ok_a = (slope_const - 0.5).abs() <= 0.02;
        // The one-step-variance rel std has its critical policy at
        // alpha = 1/2, converging to 1/(sqrt(2) E[N_{1:8}]^2).
        let e1 = order_stats::moment(1, 8, 1).unwrap().value;
        let limit = 1.0 / (2f64.sqrt() * e1 * e1);
        let at_critical = rates::rel_std_curve(8, 1.0, &CPolicy::Alpha(0.5), &[1_000_000]).unwrap()
            [0]
        .1
        .as_f64();
        let ok_b = (at_critical / limit - 1.0).abs() <= 0.05;
        // Below critical the growth exponent is (1 - 2 alpha)/2.
        let slope_quarter = Self::loglog_slope(&CPolicy::Alpha(0.25));
        let ok_c = (slope_quarter - 0.25).abs() <= 0.02;
        self.push(
            "rel_std_scaling",
            ok_a && ok_b && ok_c,
            format!(
                "const slope {slope_const:.4}; alpha=1/2 at 1e6: {at_critical:.4} vs {limit:.4}; alpha=1/4 slope {slope_quarter:.4}"
            ),
        );
    }

    fn check_invariance(&mut self) {
        // Fixed seed 26: verified to keep every offspring score inside
        // exp's faithful range over this horizon (underflow would
        // manufacture ties and break the comparison for an IEEE reason,
        // not an algorithmic one).
        let p = AlgorithmParams {
            lambda: 8,
            n: 20,
            c: 1.0 / 20f64.sqrt(),
            d_sigma: 1.0,
            seed: 26,
        };
        let mut plain = es_core::init_state(&p, &mut substream(p.seed, 0));
        let mut transformed = plain.clone();
        let mut rng_a = substream(p.seed, 1);
        let mut rng_b = substream(p.seed, 1);
        let g = |y: f64| (y - 2.0).exp();
        let mut ok = true;
        for _ in 0..40 {
            let sa = es_core::step(&mut plain, &p, &mut rng_a, None);
            let sb = es_core::step(&mut transformed, &p, &mut rng_b, Some(&g));
            ok &= sa.selected_index == sb.selected_index && sa.xi == sb.xi;
        }
        ok &= plain == transformed;
        self.push(
            "transform_invariance",
            ok,
            "identity vs exp(.-2): identical selections and final state over 40 steps".into(),
        );
    }

    fn check_determinism(&mut self) {
        let p = self.params(8, 20, 1.0 / 20f64.sqrt(), 700);
        let render = |workers: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("pool");
            pool.install(|| {
                let table = experiments::simulate_quantiles(
                    &p,
                    100,
                    200,
                    &experiments::DEFAULT_LEVELS,
                    &BatchOptions {
                        mode: SamplingMode::Marginal,
                        ..BatchOptions::default()
                    },
                )
                .unwrap();
                output::quantiles_csv(&table)
            })
        };
        let one = render(1);
        let two = render(2);
        self.push(
            "determinism_across_workers",
            one == two,
            format!("{} bytes, workers 1 vs 2", one.len()),
        );
    }
}

pub fn run_suite(opts: ValidateOptions) -> Vec<CheckResult> {
    let mut suite = Suite {
        opts,
        results: Vec::new(),
    };
    suite.check_recurrence();
    suite.check_monotonicity();
    suite.check_rate_no_cumulation();
    suite.check_random_walk();
    suite.check_rate_with_cumulation();
    suite.check_c1_reduction();
    suite.check_step_variance();
    suite.check_path_moments();
    suite.check_x_divergence();
    suite.check_scaling();
    suite.check_invariance();
    suite.check_determinism();
    suite.results
}
