use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ssrna_cli::commands::Invocation;
use ssrna_cli::config::{Command, Format, RunConfig};
use ssrna_cli::{CliError, EXIT_INVALID};

/// Deterministic and stochastic analysis of the ssRNA replication model.
///
/// Set SSRNA_THREADS to fix the worker count; results do not depend on it.
#[derive(Parser, Debug)]
#[command(name = "ssrna", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Equilibria, linearizations and mean-square stability verdicts.
    Analyze(Args),
    /// One trajectory (RK4 without noise, Euler–Maruyama with noise).
    Simulate(Args),
    /// Monte Carlo ensemble with exceedance estimate.
    Ensemble(Args),
    /// Ensembles over a grid of parameters and noise levels.
    Sweep(Args),
}

#[derive(clap::Args, Debug)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed for the Brownian streams.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SSRNA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Invalid(format!("SSRNA_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(format!("cannot start {n} threads: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let (command, args) = match cli.command {
        Cmd::Analyze(a) => (Command::Analyze, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Ensemble(a) => (Command::Ensemble, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
    };
    let config = RunConfig::load(&args.config)?;
    let outcome = Invocation::new(command, config, args.out, args.format, args.seed).run()?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", outcome.stdout);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            debug_assert!(code == EXIT_INVALID || code == ssrna_cli::EXIT_NUMERICAL);
            ExitCode::from(code as u8)
        }
    }
}
