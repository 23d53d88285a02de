//! `hybrid-thermal`: thermal states, evolutions and invariant checks from scenario files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;
mod scenario;

pub use scenario::ScenarioFile;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// Invalid parameters and malformed matrices are input errors; the rest are runtime failures.
    pub fn model(e: hybrid_thermal::Error) -> Self {
        use hybrid_thermal::Error as E;
        match e {
            E::NotHermitian { .. }
            | E::DimensionMismatch { .. }
            | E::NonFinite { .. }
            | E::UnphysicalState { .. }
            | E::NotNormalized { .. }
            | E::InvalidParameter(_)
            | E::InvalidTransition(_)
            | E::SuperoperatorCap { .. }
            | E::CflViolation { .. } => CliError::Input(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }
}

/// Exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "hybrid-thermal", version, about = "Hybrid quantum-classical thermalization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario JSON file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for random initial states and verification samples.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel commands (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the hybrid thermal state (`thermal.json`, `conditionals.csv`).
    Thermal,
    /// Integrate the master equation and write `trajectory.csv`.
    Evolve,
    /// Run the invariant suite and write a JSON report.
    Verify,
    /// Classical weight densities of the continuum limit.
    Fig2(Fig2Args),
    /// Thermal state and verification over a list of values of one scenario field.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Fig2Args {
    #[arg(long, default_value_t = 0.01)]
    pub beta_delta_e: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta_omega0: f64,
    /// Comma-separated values of δω/δE.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 5.0, 20.0, 40.0])]
    pub ratios: Vec<f64>,
    /// Grid half-length in units of δx.
    #[arg(long, default_value_t = 60.0)]
    pub half_length: f64,
    #[arg(long, default_value_t = 2401)]
    pub cells: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Dotted path of the scenario field to vary, e.g. `lattice.delta_omega`.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    let result = match &cli.command {
        Command::Fig2(args) => commands::fig2(args, &cli.out),
        other => match &cli.scenario {
            None => Err(CliError::Input("--scenario is required for this command".into())),
            Some(path) => {
                let opts = commands::Options { scenario: path.clone(), out: cli.out.clone(), seed: cli.seed };
                match other {
                    Command::Thermal => commands::thermal(&opts),
                    Command::Evolve => commands::evolve(&opts),
                    Command::Verify => commands::verify(&opts),
                    Command::Sweep(args) => commands::sweep(&opts, args),
                    Command::Fig2(_) => unreachable!(),
                }
            }
        },
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Input(_) => EXIT_INPUT,
                CliError::Runtime(_) => EXIT_VERIFY_FAILED,
            })
        }
    }
}
