//! Experiment runner for `gradest-core`: reads a TOML experiment, runs the
//! requested checks, and writes `summary.json` (deterministic for a given
//! spec and seed, whatever the worker count), `metadata.json` (timing and
//! environment), CSV tables and optional columnar binary dumps.
//!
//! Exit codes: 0 when every pass flag holds, 1 when a check fails or the
//! computation breaks down, 2 for malformed input, 3 when a modelling
//! assumption (invariant measure, integrable decay, ...) is not available.

pub mod output;
pub mod run;
pub mod spec;

pub use run::{execute, RunOptions, RunReport};
pub use spec::{ExperimentSpec, Task};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "GRADEST_WORKERS";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("assumption not available: {0}")]
    Assumption(String),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Config(_) => 2,
            CliError::Assumption(_) => 3,
            CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }
}
