//! csa-lab: closed-form rates, Monte-Carlo simulation, and validation for
//! the (1,λ)-CSA-ES on linear functions.

mod config;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use csa_core::experiments::{self, BatchOptions, SamplingMode};
use csa_core::rates;

use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "csa-lab",
    version,
    about = "(1,lambda)-CSA-ES on linear functions: rates, simulation, validation",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form divergence rates and log step-size variance.
    Rates(RatesArgs),
    /// Monte-Carlo quantile trajectories of ln(sigma_t/sigma_0).
    Simulate(SimulateArgs),
    /// Statistical validation suite; exit 1 if any check fails.
    Validate(ValidateArgs),
    /// Closed-form rel-std sweep over dimensions per c-policy.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Full,
    Marginal,
}

#[derive(Args)]
struct ParamFlags {
    /// Offspring count lambda.
    #[arg(long)]
    lambda: Option<u32>,
    /// Search space dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Cumulation parameter in (0, 1].
    #[arg(long)]
    c: Option<f64>,
    /// Damping d_sigma.
    #[arg(long)]
    dsigma: Option<f64>,
    /// Base RNG seed (falls back to CSA_LAB_SEED, then 42).
    #[arg(long)]
    seed: Option<u64>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    #[command(flatten)]
    params: ParamFlags,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamFlags,
    /// Number of independent runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Iterations per run.
    #[arg(long)]
    steps: Option<usize>,
    /// Comma-separated quantile levels in (0, 1).
    #[arg(long)]
    levels: Option<String>,
    /// Offspring sampling mode.
    #[arg(long, value_enum, default_value = "marginal")]
    mode: Mode,
    /// Worker threads (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Subsampled suite (same thresholds, smaller batches).
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Test hook: scale d_sigma in theoretical formulas only.
    #[arg(long, hide = true, default_value_t = 1.0)]
    perturb_dsigma: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// Offspring count lambda.
    #[arg(long)]
    lambda: Option<u32>,
    /// Damping d_sigma.
    #[arg(long)]
    dsigma: Option<f64>,
    /// c-policy, repeatable: constant:<c> or alpha:<a>.
    #[arg(long = "policy")]
    policies: Vec<String>,
    /// Comma-separated dimension grid.
    #[arg(long = "n-grid")]
    n_grid: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(content.as_bytes()) {
                Ok(()) => Ok(()),
                // a closed pipe (e.g. `| head`) is not an error
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(format!("cannot write to stdout: {e}")),
            }
        }
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| format!("cannot build worker pool: {e}"))?;
    Ok(pool.install(f))
}

fn cmd_rates(args: &RatesArgs) -> Result<ExitCode, String> {
    let file = FileConfig::load_opt(&args.params.config)?;
    let p = config::resolve_params(
        args.params.lambda,
        args.params.n,
        args.params.c,
        args.params.dsigma,
        args.params.seed,
        &file,
    )?;
    let report = rates::rate_report(&p).map_err(|e| e.to_string())?;
    let content = match args.format {
        Format::Json => output::rate_report_json(&report),
        Format::Csv => output::rate_report_csv(&report),
    };
    write_output(&args.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<ExitCode, String> {
    let file = FileConfig::load_opt(&args.params.config)?;
    let p = config::resolve_params(
        args.params.lambda,
        args.params.n,
        args.params.c,
        args.params.dsigma,
        args.params.seed,
        &file,
    )?;
    let runs = args.runs.or(file.runs).unwrap_or(config::defaults::RUNS);
    let steps = args.steps.or(file.steps).unwrap_or(config::defaults::STEPS);
    let levels = config::resolve_levels(&args.levels, &file)?;
    let opts = BatchOptions {
        mode: match args.mode {
            Mode::Full => SamplingMode::Full,
            Mode::Marginal => SamplingMode::Marginal,
        },
        ..BatchOptions::default()
    };
    let workers = if args.workers > 0 {
        args.workers
    } else {
        file.workers.unwrap_or(0)
    };
    let table = with_pool(workers, || {
        experiments::simulate_quantiles(&p, runs, steps, &levels, &opts)
    })?
    .map_err(|e| e.to_string())?;
    let content = match args.format {
        Format::Csv => output::quantiles_csv(&table),
        Format::Json => output::quantiles_json(&table),
    };
    write_output(&args.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: &ValidateArgs) -> Result<ExitCode, String> {
    let file = FileConfig::load_opt(&args.config)?;
    let seed = config::resolve_seed(args.seed, &file);
    let workers = if args.workers > 0 {
        args.workers
    } else {
        file.workers.unwrap_or(0)
    };
    let results = with_pool(workers, || {
        validate::run_suite(validate::ValidateOptions {
            quick: args.quick,
            seed,
            perturb_dsigma: args.perturb_dsigma,
        })
    })?;
    let mut all_ok = true;
    for r in &results {
        all_ok &= r.passed;
        println!(
            "[{}] {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!(
        "{}/{} checks passed{}",
        results.len() - failed,
        results.len(),
        if args.quick { " (quick)" } else { "" }
    );
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode, String> {
    let file = FileConfig::load_opt(&args.config)?;
    let lambda = args
        .lambda
        .or(file.lambda)
        .unwrap_or(config::defaults::LAMBDA);
    let d_sigma = args
        .dsigma
        .or(file.dsigma)
        .unwrap_or(config::defaults::D_SIGMA);
    let policies = if !args.policies.is_empty() {
        config::parse_policies(&args.policies)?
    } else if let Some(specs) = &file.policies {
        config::parse_policies(specs)?
    } else {
        config::default_policies()
    };
    let n_grid = config::parse_n_grid(&args.n_grid, &file)?;
    let rows = experiments::rel_std_sweep(lambda, d_sigma, &policies, &n_grid)
        .map_err(|e| e.to_string())?;
    let content = match args.format {
        Format::Csv => output::sweep_csv(&rows),
        Format::Json => output::sweep_json(&rows),
    };
    write_output(&args.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Rates(args) => cmd_rates(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
