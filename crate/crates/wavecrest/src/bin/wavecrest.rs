//! Batch CLI for the wavecrest solvers and studies.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wavecrest::driver;

#[derive(Parser)]
#[command(
    name = "wavecrest",
    version,
    about = "2D free-surface gravity waves in conformal boundary variables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a solver run described by a config file.
    Run {
        /// Path to the flat key = value config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Operator-identity battery (PASS/FAIL table).
    Identities {
        /// Grid resolution.
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Seed for the reproducible random test fields.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Temporal (RK4) and spatial (spectral) convergence checks.
    Convergence {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Amplitude-scaling study of the normal-form quantities.
    Scaling {
        /// Grid resolution for the study windows.
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Conformal-variable vs Lagrangian cross-validation.
    Crossvalidate {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out } => driver::cmd_run(&config, out.as_deref()),
        Command::Identities { n, seed, out } => driver::cmd_identities(n, seed, &out),
        Command::Convergence { out } => driver::cmd_convergence(&out),
        Command::Scaling { n, out } => driver::cmd_scaling(n, &out),
        Command::Crossvalidate { out } => driver::cmd_crossvalidate(&out),
    };
    ExitCode::from(code.clamp(0, 255) as u8)
}
