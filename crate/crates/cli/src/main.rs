use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use heisenlab_cli::config::Command;
use heisenlab_cli::{run_from_path, CliError, Invocation, EXIT_USAGE};

/// Smoothness audits of operators under the Heisenberg conjugation action.
#[derive(Parser, Debug)]
#[command(name = "heisenlab", version)]
struct Args {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides HEISENLAB_OUT and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ignore and do not write the result cache.
    #[arg(long)]
    no_cache: bool,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    if args.jobs == Some(0) {
        eprintln!("error: --jobs must be at least 1");
        return ExitCode::from(EXIT_USAGE as u8);
    }
    let inv = Invocation { out: args.out, no_cache: args.no_cache, jobs: args.jobs };
    match run_from_path(&args.config, args.command, &inv) {
        Ok(outcome) => {
            let s = &outcome.report.summary;
            for v in &s.violations {
                eprintln!("violation: {v}");
            }
            for c in &s.failed_checks {
                eprintln!("check failed: {c}");
            }
            println!(
                "{}: {} families, {} violations, report in {}",
                args.command,
                outcome.report.families.len().max(outcome.report.garding.len()),
                s.violations.len(),
                outcome.out_dir.display()
            );
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e @ (CliError::Config(_) | CliError::Run(_) | CliError::Io(_) | CliError::Pool(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
