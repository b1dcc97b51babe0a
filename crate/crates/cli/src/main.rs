//! `ecgparam`: measure ECG intervals, compare them against references and
//! evaluate threshold diagnostics.
//!
//! Exit codes: 0 on completion (records may still be excluded by the
//! quality gate), 2 for usage or configuration errors, 3 for data errors.

mod analyze;
mod config;
mod diagnose;
mod io;
mod manifest;
mod plot;
mod synth;
mod validate;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    Config(String),
    /// Unreadable or unusable input, or a failed write; exit code 3.
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Parser)]
#[command(name = "ecgparam", version, about = "Single-lead ECG interval measurement and agreement analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags every subcommand accepts.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML configuration; defaults are used for anything not set.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Seed for anything random.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores. Never changes output.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Preprocess, gate, delineate and measure record CSV files.
    Analyze(analyze::AnalyzeArgs),
    /// Compare measured intervals against reference annotations.
    Validate(validate::ValidateArgs),
    /// Evaluate LQT and AVBI threshold classifiers against truth labels.
    Diagnose(diagnose::DiagnoseArgs),
    /// Generate synthetic records with known fiducials.
    Synth(synth::SynthArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Analyze(a) => &a.common,
        Command::Validate(a) => &a.common,
        Command::Diagnose(a) => &a.common,
        Command::Synth(a) => &a.common,
    };
    let config = Config::load(common.config.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", common.jobs.unwrap_or(0))))?;
    pool.install(|| match &cli.command {
        Command::Analyze(a) => analyze::run(a, &config),
        Command::Validate(a) => validate::run(a, &config),
        Command::Diagnose(a) => diagnose::run(a, &config),
        Command::Synth(a) => synth::run(a, &config),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ecgparam: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
