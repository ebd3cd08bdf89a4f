//! `latsub` command-line front end: scheme files, reports and subcommands.
//!
//! Exit codes: 0 success, 1 error, 2 certification not achieved.

pub mod commands;
pub mod report;
pub mod schemefile;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use latsub_core::PNorm;
use thiserror::Error;

pub use commands::{EXIT_ERROR, EXIT_OK, EXIT_UNCERTIFIED};
pub use report::AnalysisReport;
pub use schemefile::{parse_scheme, parse_scheme_str, serialize_scheme, SchemeFile, SchemeFileError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scheme(#[from] SchemeFileError),

    #[error(transparent)]
    Core(#[from] latsub_core::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "latsub", version, about = "Analyze, verify and render nonlinear subdivision schemes on integer lattices")]
pub struct Cli {
    /// Seed for randomized diagnostics and lower-bound trials.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Time budget for joint spectral radius enumeration, in milliseconds.
    /// Overrides LATSUB_BUDGET_MS.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget_ms: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify convergence and regularity and write a report.
    Analyze {
        scheme: PathBuf,
        #[arg(long, default_value = "inf")]
        p: PNorm,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        max_order: u32,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        depth: Option<u32>,
        /// Text report path; the JSON twin goes next to it.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Explicit JSON twin path.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run the invariant suites against a scheme.
    Verify { scheme: PathBuf },
    /// Run the cascade and sample the limit function on a grid.
    Render {
        scheme: PathBuf,
        /// CSV rows `k1,...,kd,value`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 6)]
        levels: u32,
        /// `hat`, `courant` or `boxspline:1,0;0,1;1,1`.
        #[arg(long, default_value = "hat")]
        basis: String,
        #[arg(long, default_value = "256x256")]
        grid: String,
        /// Output `.csv` or `.pgm`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive the scheme for the differences and emit its masks as JSON.
    DeriveDiff {
        scheme: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        order: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bound the joint spectral radius of a difference scheme.
    Jsr {
        scheme: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        order: u32,
        #[arg(long, default_value = "inf")]
        p: PNorm,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        depth: Option<u32>,
    },
    /// Sample a box spline on a grid over its support.
    Boxspline {
        /// Direction vectors, e.g. `1,0;0,1;1,1`; repeat a vector for multiplicity.
        #[arg(long)]
        directions: String,
        #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(2..))]
        grid: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn execute(cli: Cli) -> Result<i32, CliError> {
    let g = commands::Globals { seed: cli.seed, budget_ms: cli.budget_ms };
    match cli.command {
        Command::Analyze { scheme, p, max_order, depth, report, json } => {
            commands::analyze(&commands::AnalyzeArgs { scheme, p, max_order, depth, report, json }, g)
        }
        Command::Verify { scheme } => commands::verify(&scheme, g),
        Command::Render { scheme, input, levels, basis, grid, out } => {
            commands::render_cmd(&commands::RenderArgs { scheme, input, levels, basis, grid, out })
        }
        Command::DeriveDiff { scheme, order, out } => commands::derive_diff(&scheme, order, out.as_deref()),
        Command::Jsr { scheme, order, p, depth } => commands::jsr(&commands::JsrArgs { scheme, order, p, depth }, g),
        Command::Boxspline { directions, grid, out } => commands::boxspline_cmd(&directions, grid as usize, &out),
    }
}

/// Parses arguments (including the program name) and runs the command.
/// Usage errors exit with 1 so that 2 keeps its certification meaning.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
