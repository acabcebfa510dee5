//! Batch front end for the Kerr-Newman Dirac toolkit.

pub mod config;
pub mod output;
pub mod tasks;

use std::path::PathBuf;

pub use config::{Overrides, RunConfig};
pub use output::{Check, Report, Table};
pub use tasks::{run_task, Task};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },

    #[error("{task}: {source}")]
    Numerical { task: String, source: kndirac::Error },

    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    /// Parameter problems found during a run are still configuration errors.
    pub fn from_core(task: &str, e: kndirac::Error) -> Self {
        match e {
            kndirac::Error::InvalidParameter(msg) => CliError::Config { path: task.to_string(), msg },
            source => CliError::Numerical { task: task.to_string(), source },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical { .. } | CliError::Io(_) => 3,
        }
    }
}

/// Runs one task and writes its files. Returns the written paths and
/// whether every check passed.
pub fn run(task: Task, cfg: &RunConfig) -> Result<(Vec<PathBuf>, Report), CliError> {
    let report = run_task(task, cfg)?;
    let files = report.write(&cfg.out, &tasks::config_value(cfg))?;
    Ok((files, report))
}
