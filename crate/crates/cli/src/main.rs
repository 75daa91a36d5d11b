use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use strainmodal_cli::{cmd_compare, cmd_fit_shapes, cmd_identify, cmd_simulate, CliError};

/// Bridge modal identification from distributed strain arrays.
///
/// Exit codes: 0 success, 2 configuration or usage error, 3 simulation
/// error, 4 identification or fit degeneracy. Set STRAINMODAL_LOG (error,
/// warn, info, debug) for diagnostics on standard error.
#[derive(Parser)]
#[command(name = "strainmodal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a multi-span beam; writes strain and accel records and truth.json.
    Simulate {
        /// Scenario JSON; the built-in three-span scenario when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write records as CSV instead of binary.
        #[arg(long)]
        csv: bool,
    },
    /// Identify modes from a record; writes modes.json and stabilization.csv.
    Identify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Record file (.csv or binary); overrides io.record.
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit strain mode shapes and integrate them to displacement shapes.
    FitShapes {
        /// Pipeline configuration with the span layout.
        #[arg(long)]
        config: PathBuf,
        /// modes.json from identify; overrides io.modes.
        #[arg(long)]
        modes: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pair two modal sets (modes.json, truth.json or shapes.json).
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out, seed, csv } => cmd_simulate(config.as_deref(), &out, seed, csv),
        Command::Identify { config, record, out } => cmd_identify(config.as_deref(), record.as_deref(), out.as_deref()),
        Command::FitShapes { config, modes, out } => cmd_fit_shapes(&config, modes.as_deref(), out.as_deref()),
        Command::Compare { a, b, out } => cmd_compare(&a, &b, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STRAINMODAL_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("strainmodal: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
