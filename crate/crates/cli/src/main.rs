//! `vbstereo` command-line runner.
//!
//! Exit codes: 0 success, 2 configuration error, 3 internal error.

mod args;
mod commands;
mod meta;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// A run failure and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Internal(String),
}

impl Failure {
    pub fn config(e: impl fmt::Display) -> Self {
        Failure::Config(e.to_string())
    }

    pub fn internal(e: impl fmt::Display) -> Self {
        Failure::Internal(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::AnalyzeErrors(a) => commands::analyze_errors(&a),
        Command::SyncLimits(a) => commands::sync_limits(&a),
        Command::Calib(a) => commands::calib(&a),
        Command::SimForest(a) => commands::sim_forest(&a),
        Command::SimGap(a) => commands::sim_gap(&a),
        Command::SimImo(a) => commands::sim_imo(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vbstereo: {e}");
            ExitCode::from(e.code())
        }
    }
}
