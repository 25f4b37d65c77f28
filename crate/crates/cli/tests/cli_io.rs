//! End-to-end checks of the csa-lab binary: schemas, exit codes, config
//! precedence, and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_csa-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn csa-lab")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

#[test]
fn rates_json_has_all_variance_fields() {
    let out = run(&["rates", "--lambda", "8", "--n", "20", "--c", "0.2236"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for key in [
        "rate_no_cumulation",
        "rate_with_cumulation",
        "a",
        "k4",
        "k31",
        "k22",
        "k211",
        "k1111",
        "second_moment_limit",
        "fourth_moment_limit",
        "variance",
        "rel_std",
    ] {
        assert!(
            text.contains(&format!("\"{key}\"")),
            "missing {key} in {text}"
        );
    }
}

#[test]
fn rates_zero_rate_renders_inf() {
    let out = run(&["rates", "--lambda", "2", "--n", "20", "--c", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("\"rel_std\": \"inf\""), "{text}");
    // csv form spells it without quotes
    let csv = stdout(&run(&[
        "rates", "--lambda", "2", "--n", "20", "--c", "1", "--format", "csv",
    ]));
    assert!(csv.starts_with("key,value\n"));
    assert!(csv.contains("rel_std,inf\n"), "{csv}");
}

#[test]
fn invalid_c_exits_two() {
    let out = run(&["rates", "--c", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["rates", "--c", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_exits_two() {
    let out = run(&["rates", "--nonsense", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_csv_schema_and_single_run_degeneracy() {
    let out = run(&[
        "simulate", "--runs", "1", "--steps", "5", "--seed", "9", "--lambda", "4", "--n", "6",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,level,value"));
    // 6 time points x 9 default levels
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6 * 9);
    // With a single run every level coincides with the trajectory.
    for t in 0..6 {
        let values: Vec<&str> = rows[t * 9..(t + 1) * 9]
            .iter()
            .map(|r| r.rsplit(',').next().unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[0] == w[1]), "t={t}: {values:?}");
    }
}

#[test]
fn simulate_deterministic_across_workers_and_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..3)
        .map(|i| tmp.path().join(format!("q{i}.csv")))
        .collect();
    for (path, workers) in paths.iter().zip(["1", "8", "1"]) {
        let out = run(&[
            "simulate",
            "--runs",
            "64",
            "--steps",
            "50",
            "--seed",
            "1234",
            "--workers",
            workers,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read(&paths[0]).unwrap();
    let b = std::fs::read(&paths[1]).unwrap();
    let c = std::fs::read(&paths[2]).unwrap();
    assert_eq!(a, b, "workers 1 vs 8 differ");
    assert_eq!(a, c, "reruns differ");
}

#[test]
fn sweep_csv_schema() {
    let out = run(&[
        "sweep",
        "--policy",
        "constant:1",
        "--policy",
        "alpha:0.5",
        "--n-grid",
        "10,100",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "policy,n,rel_std");
    assert_eq!(lines.len(), 1 + 4);
    assert!(lines[1].starts_with("constant:1,10,"));
    assert!(lines[4].starts_with("alpha:0.5,100,"));
}

#[test]
fn sweep_rejects_bad_policy() {
    let out = run(&["sweep", "--policy", "linear:0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "lambda = 3\nn = 7\nc = 0.5\n").unwrap();
    // file values apply...
    let text = stdout(&run(&[
        "rates",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
    ]));
    assert!(text.contains("lambda,3\n"), "{text}");
    assert!(text.contains("n,7\n"), "{text}");
    // ...and flags override them
    let text = stdout(&run(&[
        "rates",
        "--config",
        cfg.to_str().unwrap(),
        "--lambda",
        "5",
        "--format",
        "csv",
    ]));
    assert!(text.contains("lambda,5\n"), "{text}");
    assert!(text.contains("n,7\n"), "{text}");
}

#[test]
fn config_rejects_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "lambda = 3\nbogus = 1\n").unwrap();
    let out = run(&["rates", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_env_fallback() {
    let with_env = bin()
        .args(["rates", "--format", "csv"])
        .env("CSA_LAB_SEED", "777")
        .output()
        .unwrap();
    assert!(stdout(&with_env).contains("seed,777\n"));
    // explicit flag beats the environment
    let with_flag = bin()
        .args(["rates", "--format", "csv", "--seed", "5"])
        .env("CSA_LAB_SEED", "777")
        .output()
        .unwrap();
    assert!(stdout(&with_flag).contains("seed,5\n"));
}

#[test]
fn validate_perturbed_theory_fails() {
    // Sensitivity hook: skewing d_sigma in the closed forms must break the
    // agreement checks. (--quick keeps the suite under a couple of minutes;
    // the healthy-path exit 0 is covered by the acceptance suite.)
    let out = run(&["validate", "--quick", "--perturb-dsigma", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("[FAIL]"), "{text}");
}

#[test]
fn help_names_every_subcommand() {
    let out = run(&["--help"]);
    let text = stdout(&out);
    for sub in ["rates", "simulate", "validate", "sweep"] {
        assert!(text.contains(sub), "missing {sub}");
    }
    assert!(Path::new(env!("CARGO_BIN_EXE_csa-lab")).exists());
}

#[test]
fn validate_quick_passes_on_correct_build() {
    let out = run(&["validate", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("12/12 checks passed"), "{text}");
    assert!(!text.contains("[FAIL]"), "{text}");
}

#[test]
fn config_file_seed_beats_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("seed.toml");
    std::fs::write(&cfg, "seed = 99\n").unwrap();
    let out = bin()
        .args([
            "rates",
            "--format",
            "csv",
            "--config",
            cfg.to_str().unwrap(),
        ])
        .env("CSA_LAB_SEED", "777")
        .output()
        .unwrap();
    assert!(stdout(&out).contains("seed,99\n"));
}
