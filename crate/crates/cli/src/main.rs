//! `nldt` command-line pipeline: data generation, tree induction, pruning,
//! closed-loop re-optimization, re-engineering and evaluation.

mod artifact;
mod commands;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use nldt::NldtError;

/// Failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const USAGE: u8 = 2;
    pub const DATA: u8 = 3;
    pub const RUNTIME: u8 = 4;

    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: Self::USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { code: Self::DATA, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError { code: Self::RUNTIME, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<NldtError> for CliError {
    fn from(e: NldtError) -> Self {
        let code = match &e {
            NldtError::Config(_) => CliError::USAGE,
            NldtError::Dataset(_)
            | NldtError::Malformed { .. }
            | NldtError::ConstantFeature { .. }
            | NldtError::InvalidTree(_)
            | NldtError::InvalidRule(_)
            | NldtError::InvalidBounds { .. }
            | NldtError::DimensionMismatch { .. }
            | NldtError::ProfileMismatch(_)
            | NldtError::UnknownPlotKind(_)
            | NldtError::Io(_)
            | NldtError::Json(_)
            | NldtError::Csv(_) => CliError::DATA,
            _ => CliError::RUNTIME,
        };
        CliError { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = commands::Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(CliError::RUNTIME);
        }
    };
    match pool.install(|| commands::run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.message.replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::from(e.code)
        }
    }
}
