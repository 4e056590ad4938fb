//! Runner behind the `heisenlab` binary: configuration, caching, pipeline
//! execution and report files.

pub mod cache;
pub mod config;
pub mod report;
pub mod run;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::cache::Cache;
use crate::config::{Command, RunConfig};
use crate::report::{write_outputs, Metadata};
use crate::run::{execute, Report};

/// Environment variable that overrides the output directory of the config.
pub const OUT_ENV: &str = "HEISENLAB_OUT";
pub const DEFAULT_OUT: &str = "heisenlab-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATIONS: i32 = 2;

#[derive(Clone, Debug, Default)]
pub struct Invocation {
    pub out: Option<PathBuf>,
    pub no_cache: bool,
    pub jobs: Option<usize>,
}

pub struct Outcome {
    pub report: Report,
    pub out_dir: PathBuf,
    pub exit_code: i32,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Run(#[from] run::RunError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// `--out` beats the environment, which beats the config file.
pub fn resolve_out(cfg: &RunConfig, inv: &Invocation) -> PathBuf {
    inv.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn run_with_config(cfg: &RunConfig, command: Command, inv: &Invocation) -> Result<Outcome, CliError> {
    cfg.validate(command)?;
    let out_dir = resolve_out(cfg, inv);
    let cache = if cfg.cache && !inv.no_cache { Cache::new(out_dir.join("cache")) } else { Cache::disabled() };
    let jobs = inv.jobs.unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| CliError::Pool(e.to_string()))?;
    let started = now();
    log::info!("{command}: {} grid sizes, output in {}", cfg.grid.points.len(), out_dir.display());
    let report = pool.install(|| execute(cfg, command, &cache))?;
    let finished = now();
    let exit_code = report.summary.exit_code;
    let meta = Metadata {
        tool: report.tool.clone(),
        version: report.version.clone(),
        command: command.to_string(),
        started_unix: started,
        finished_unix: finished,
        elapsed_seconds: finished - started,
        output_dir: out_dir.clone(),
        cache_enabled: cache.is_enabled(),
        cache_hits: cache.hits(),
        cache_misses: cache.misses(),
        jobs,
        exit_code,
    };
    write_outputs(&out_dir, &report, &meta)?;
    Ok(Outcome { report, out_dir, exit_code })
}

pub fn run_from_path(path: &Path, command: Command, inv: &Invocation) -> Result<Outcome, CliError> {
    let cfg = RunConfig::load(path)?;
    run_with_config(&cfg, command, inv)
}
