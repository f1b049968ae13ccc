//! Experiment driver for the `torres-core` kernels: TOML configuration,
//! parallel orchestration, and deterministic CSV/SVG output.

pub mod config;
pub mod csv;
pub mod experiments;
pub mod svg;

use std::fmt;

use torres_core::Error as CoreError;

pub use config::ExperimentConfig;

/// Toolkit version written into every provenance record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit statuses of the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    CheckFailed = 1,
    Degenerate = 2,
    Numerical = 3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub code: ExitStatus,
    pub message: String,
}

impl Failure {
    pub fn degenerate(e: impl fmt::Display) -> Self {
        Self { code: ExitStatus::Degenerate, message: e.to_string() }
    }

    pub fn numerical(e: impl fmt::Display) -> Self {
        Self { code: ExitStatus::Numerical, message: e.to_string() }
    }

    pub fn io(e: impl fmt::Display) -> Self {
        Self::numerical(format!("i/o: {e}"))
    }

    /// Bad input maps to exit 2, solver trouble to exit 3.
    pub fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::IllConditionedEigenbasis { .. }
            | CoreError::BranchCut { .. }
            | CoreError::NonConvergence { .. }
            | CoreError::Singular => Self::numerical(e),
            _ => Self::degenerate(e),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

/// Worker pool sized by `TORRES_THREADS` (unset or `0`: hardware parallelism).
pub fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let threads = match std::env::var("TORRES_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Failure::degenerate(format!("TORRES_THREADS must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(Failure::numerical)
}
