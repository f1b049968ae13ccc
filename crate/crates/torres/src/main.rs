use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use torres::experiments::{run_escape_check, run_fbi_check, run_resonances, run_viscosity_sweep, Outcome};
use torres::{thread_pool, ExperimentConfig, Failure};

/// Resonances and viscosity limits of 0th-order pseudodifferential operators
/// on the torus.
///
/// Exit codes: 0 ok, 1 check failed, 2 degenerate input, 3 numerical failure.
/// Worker threads: TORRES_THREADS (default: hardware parallelism).
#[derive(Parser)]
#[command(name = "torres", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of the deformed operator per (n, θ); writes spectra.csv.
    Resonances { config: PathBuf },
    /// Viscous spectra over nu_sweep, eigenvalue paths and their limits;
    /// writes paths.csv, distances.csv and figure.svg.
    ViscositySweep { config: PathBuf },
    /// FBI inversion and Lebeau identities; writes fbi_errors.csv.
    FbiCheck { config: PathBuf },
    /// Positivity of H_p G on the characteristic set.
    EscapeCheck { config: PathBuf },
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let pool = thread_pool()?;
    let (path, f): (_, fn(&ExperimentConfig, &rayon::ThreadPool) -> Result<Outcome, Failure>) = match cli.command {
        Command::Resonances { config } => (config, run_resonances),
        Command::ViscositySweep { config } => (config, run_viscosity_sweep),
        Command::FbiCheck { config } => (config, run_fbi_check),
        Command::EscapeCheck { config } => (config, run_escape_check),
    };
    let cfg = ExperimentConfig::load(&path)?;
    f(&cfg, &pool)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(o) => {
            println!("{}", o.summary);
            ExitCode::from(o.status as u8)
        }
        Err(e) => {
            eprintln!("torres: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
