use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod cmd;
mod config;
mod output;

use config::{pick, CliError, FileConfig, DEFAULT_RESTARTS, DEFAULT_SEED};
use output::Sink;

/// Uncertainty geometry of the finite-dimensional canonical pair (Q, P).
///
/// Settings resolve as command-line flags, then keys of the `--config` TOML
/// file (kebab-case flag names), then the documented defaults. With `--out`,
/// results are written atomically and the resolved configuration is echoed
/// to `<out>.config.json`; otherwise they go to stdout.
///
/// Exit codes: 0 success, 2 invalid configuration, 3 optimizer did not
/// converge (results are still written, with flags), 1 other failures.
/// FINITEQP_THREADS caps the worker pool.
#[derive(Debug, Parser)]
#[command(name = "finiteqp", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed for all random draws [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Random restarts per optimization [default: 64]
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// TOML file with default settings
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Canonical pair construction and structural checks
    Ops(cmd::ops::OpsArgs),
    /// Covariance region of (Q, P)
    Region(cmd::region::RegionArgs),
    /// Joint numerical ranges
    Jnr(cmd::jnr::JnrArgs),
    /// Minimum-uncertainty states
    Minunc(cmd::minunc::MinuncArgs),
    /// Estimation accuracy bounds and Monte Carlo
    Metrology(cmd::metrology::MetrologyArgs),
    /// Covariance entanglement witness
    Entangle(cmd::entangle::EntangleArgs),
}

pub struct Ctx {
    pub file: FileConfig,
    pub seed: u64,
    pub restarts: usize,
    pub sink: Sink,
}

/// Whether every optimizer call in a command converged.
pub struct Outcome {
    pub converged: bool,
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let file = match &cli.global.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let ctx = Ctx {
        seed: pick(cli.global.seed, file.seed, DEFAULT_SEED),
        restarts: pick(cli.global.restarts, file.restarts, DEFAULT_RESTARTS),
        sink: Sink {
            out: cli.global.out.clone().or_else(|| file.out.clone()),
        },
        file,
    };
    config::ensure(ctx.restarts >= 1, "restarts", "must be at least 1")?;
    match cli.command {
        Command::Ops(a) => cmd::ops::run(&ctx, a),
        Command::Region(a) => cmd::region::run(&ctx, a),
        Command::Jnr(a) => cmd::jnr::run(&ctx, a),
        Command::Minunc(a) => cmd::minunc::run(&ctx, a),
        Command::Metrology(a) => cmd::metrology::run(&ctx, a),
        Command::Entangle(a) => cmd::entangle::run(&ctx, a),
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FINITEQP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("FINITEQP_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| run(cli));
    match result {
        Ok(Outcome { converged: true }) => ExitCode::SUCCESS,
        Ok(Outcome { converged: false }) => {
            eprintln!("warning: some optimizations did not converge; see the `converged` columns");
            ExitCode::from(3)
        }
        Err(e @ CliError::Validation(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
