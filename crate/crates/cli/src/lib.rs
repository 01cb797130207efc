//! Command-line harness: instance generation, solver runs, parameter sweeps
//! and verification suites, with CSV and JSON output.

pub mod commands;
pub mod config;
pub mod output;
pub mod suites;

use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::commands::Output;
use crate::config::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] privlp::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    /// 2 for invariant violations, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invariant(_) | Self::Core(privlp::Error::InvariantViolation(_)) => 2,
            _ => 1,
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::SolveHomogeneous(a) => commands::solve_homogeneous(a),
        Command::SolveGeneral(a) => commands::solve_general(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Verify(a) => commands::verify(a),
    }
}

pub fn write_output(out: &Output) -> Result<(), CliError> {
    for (path, bytes) in &out.files {
        std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    }
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(&out.stdout).and_then(|_| stdout.flush()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

/// Runs a parsed command line and returns the process exit code: 0 on
/// success, 1 on configuration errors, 2 on invariant violations and failed
/// verification suites.
pub fn run(cli: &Cli) -> i32 {
    let result = execute(cli).and_then(|out| write_output(&out).map(|_| out.failed));
    match result {
        Ok(false) => 0,
        Ok(true) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
