//! Configuration resolution: CLI flags override config-file values, which
//! override built-in defaults. `CSA_LAB_SEED` slots in between file and
//! default for the seed only.

use std::path::{Path, PathBuf};

use csa_core::experiments::DEFAULT_LEVELS;
use csa_core::rates::{AlgorithmParams, CPolicy};
use serde::Deserialize;

/// Built-in defaults: the classic diverging configuration (lambda = 8,
/// n = 20, c = 1/sqrt(n)).
pub mod defaults {
    pub const LAMBDA: u32 = 8;
    pub const N: usize = 20;
    /// c = 1/sqrt(20)
    pub const C: f64 = 0.223_606_797_749_978_96;
    pub const D_SIGMA: f64 = 1.0;
    pub const SEED: u64 = 42;
    pub const RUNS: usize = 5001;
    pub const STEPS: usize = 5000;
}

pub const SEED_ENV: &str = "CSA_LAB_SEED";

/// Optional values loaded from a TOML config file. Unknown keys are
/// rejected.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub lambda: Option<u32>,
    pub n: Option<usize>,
    pub c: Option<f64>,
    pub dsigma: Option<f64>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub steps: Option<usize>,
    pub levels: Option<Vec<f64>>,
    pub policies: Option<Vec<String>>,
    pub n_grid: Option<Vec<usize>>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    pub fn load_opt(path: &Option<PathBuf>) -> Result<Self, String> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }
}

fn seed_from_env() -> Option<u64> {
    std::env::var(SEED_ENV).ok().and_then(|v| v.parse().ok())
}

/// Flag > file > (env, seed only) > default.
pub fn resolve_params(
    lambda: Option<u32>,
    n: Option<usize>,
    c: Option<f64>,
    dsigma: Option<f64>,
    seed: Option<u64>,
    file: &FileConfig,
) -> Result<AlgorithmParams, String> {
    let params = AlgorithmParams {
        lambda: lambda.or(file.lambda).unwrap_or(defaults::LAMBDA),
        n: n.or(file.n).unwrap_or(defaults::N),
        c: c.or(file.c).unwrap_or(defaults::C),
        d_sigma: dsigma.or(file.dsigma).unwrap_or(defaults::D_SIGMA),
        seed: seed
            .or(file.seed)
            .or_else(seed_from_env)
            .unwrap_or(defaults::SEED),
    };
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

pub fn resolve_seed(seed: Option<u64>, file: &FileConfig) -> u64 {
    seed.or(file.seed)
        .or_else(seed_from_env)
        .unwrap_or(defaults::SEED)
}

pub fn resolve_levels(levels: &Option<String>, file: &FileConfig) -> Result<Vec<f64>, String> {
    if let Some(spec) = levels {
        return spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("invalid quantile level '{s}'"))
            })
            .collect();
    }
    Ok(file
        .levels
        .clone()
        .unwrap_or_else(|| DEFAULT_LEVELS.to_vec()))
}

pub fn parse_policies(specs: &[String]) -> Result<Vec<CPolicy>, String> {
    specs
        .iter()
        .map(|s| s.parse::<CPolicy>().map_err(|e| e.to_string()))
        .collect()
}

/// Default sweep curves: three constants and four alpha policies.
pub fn default_policies() -> Vec<CPolicy> {
    vec![
        CPolicy::Constant(1.0),
        CPolicy::Constant(0.5),
        CPolicy::Constant(0.2),
        CPolicy::Alpha(0.25),
        CPolicy::Alpha(1.0 / 3.0),
        CPolicy::Alpha(0.5),
        CPolicy::Alpha(1.0),
    ]
}

pub fn default_n_grid() -> Vec<usize> {
    vec![
        2, 5, 10, 20, 50, 100, 200, 500, 1_000, 2_000, 5_000, 10_000, 20_000, 50_000, 100_000,
        200_000, 500_000, 1_000_000,
    ]
}

pub fn parse_n_grid(spec: &Option<String>, file: &FileConfig) -> Result<Vec<usize>, String> {
    if let Some(s) = spec {
        return s
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("invalid n value '{v}'"))
            })
            .collect();
    }
    Ok(file.n_grid.clone().unwrap_or_else(default_n_grid))
}
