//! `palmlab`: simulate point processes on the line, estimate Palm
//! quantities, diagnose mean stationarity and run the identity suite.
//!
//! Exit status: 0 on success, 1 when the suite has failures, 2 for usage
//! and config errors, 3 when a run fails (estimation or IO).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "palmlab",
    version,
    about = "Palm calculus experiments on the real line"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML, one table per subcommand).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root seed; overrides PALMLAB_SEED and the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Replications; overrides the config.
    #[arg(long, global = true, value_name = "N")]
    reps: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Run a single identity (suite only).
    #[arg(long, global = true, value_name = "ID")]
    only: Option<String>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Draw patterns and write them as a pattern file.
    Simulate,
    /// Palm, shifted Palm, intermediate or intensity estimates.
    Palm,
    /// Cesàro trace and stationarity verdict.
    Ams,
    /// Check every registered identity on a model catalog.
    Suite,
    /// Exact sequences and averages of the lattice example.
    Example44,
    /// Closed-form checks of the exponential tilt example.
    Example84,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", location(section, field))]
    Config {
        section: String,
        field: String,
        message: String,
    },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{0}")]
    Run(String),
}

fn location(section: &str, field: &str) -> String {
    match (section.is_empty(), field.is_empty()) {
        (true, true) => String::new(),
        (true, false) => format!(" at `{field}`"),
        (false, true) => format!(" in [{section}]"),
        (false, false) => format!(" in [{section}] at `{field}`"),
    }
}

impl CliError {
    pub fn config(section: &str, field: &str, message: impl Into<String>) -> Self {
        Self::Config {
            section: section.to_string(),
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn run(err: impl std::fmt::Display) -> Self {
        Self::Run(err.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            Self::Config { .. } | Self::Usage(_) => 2,
            Self::Run(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("palmlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
