use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Schema(String),
    #[error("network analysis failed: {0}")]
    Netcalc(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("tuning failed: {0}")]
    Tuning(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Io(_) => 1,
            Self::Schema(_) => 2,
            Self::Netcalc(_) => 3,
            Self::Simulation(_) => 4,
            Self::Tuning(_) => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ise,
    Robust,
}

#[derive(Parser)]
#[command(version, about = "Worst-case Ethernet delay bounds and delay-compensated control loops")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-stream end-to-end delay bounds.
    Bound {
        #[arg(long)]
        config: PathBuf,
        /// Also write bounds.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-loop scenarios under random delays up to the computed bounds.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "UBDNET_SEED")]
        seed: Option<u64>,
        /// Comma-separated subset of nominal-no-delay, nominal-delayed, smith, robust.
        #[arg(long, value_delimiter = ',')]
        scenarios: Option<Vec<String>>,
    },
    /// Tune the controller by ISE or against the robust performance condition.
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
    },
    /// Uncertainty radius and weight magnitudes over the frequency grid.
    Weights {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bound { config, out } => commands::bound(&config, out.as_deref()),
        Command::Simulate { config, out, seed, scenarios } => {
            commands::simulate(&config, &out, seed, scenarios.as_deref())
        }
        Command::Tune { config, method } => commands::tune(&config, method),
        Command::Weights { config, out } => commands::weights(&config, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
