//! Command-line front end: ingestion, configuration and report output for
//! the `hurst` binary.

pub mod commands;
pub mod config;
pub mod ingest;
pub mod parse;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hurst_core::fbm::FbmMethod;
use hurst_core::{EstimatorKind, HurstError};
use serde::Serialize;
use thiserror::Error;

use ingest::{Column, DetrendArg, IngestError, LengthPolicy, Transform};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "HURST_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
        }
    }
}

impl From<HurstError> for CliError {
    fn from(e: HurstError) -> Self {
        if e.is_degeneracy() {
            CliError::Degenerate(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hurst",
    version,
    about = "Model-free Hurst roughness estimation on dyadic samples"
)]
pub struct Cli {
    /// TOML file whose keys are used as flags; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Faber-Schauder coefficients, energy trace and p-th variations.
    Analyze(AnalyzeArgs),
    /// One estimator on one window.
    Estimate(EstimateArgs),
    /// T-adjusted rolling estimates over a long series.
    Roll(RollArgs),
    /// Monte Carlo ensemble statistics on simulated fBm.
    Simulate(SimulateArgs),
    /// Diagnostics of the consistency conditions.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// CSV file with one sample per row.
    #[arg(long)]
    pub input: PathBuf,
    /// Value column: zero-based index or header name.
    #[arg(long, default_value = "0")]
    pub value_col: Column,
    /// Timestamp column carried through to rolling output.
    #[arg(long)]
    pub time_col: Option<Column>,
    /// Handling of sample counts other than 2^n + 1.
    #[arg(long, value_enum)]
    pub length: Option<LengthPolicy>,
    #[arg(long, value_enum, default_value_t = Transform::None)]
    pub transform: Transform,
    #[arg(long, value_enum, default_value_t = DetrendArg::None)]
    pub detrend: DetrendArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProfileArgs {
    /// Window depth: the profile has m + 1 weights.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// `uniform`, `geometric:r` or a comma list of weights.
    #[arg(long, default_value = "geometric:0.5")]
    pub alpha: String,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Exponents for the p-th variation table.
    #[arg(long, default_value = "1,2,3")]
    pub p: String,
    /// Include every coefficient in the report.
    #[arg(long)]
    pub coefficients: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "terminal", value_parser = parse_kind)]
    pub kind: EstimatorKind,
    /// Top level; defaults to the series resolution.
    #[arg(long)]
    pub n: Option<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub profile: ProfileArgs,
    /// Lags for simple_regression; default 1, 2, ..., 2^m.
    #[arg(long)]
    pub ks: Option<String>,
    /// Moment orders for simple_regression.
    #[arg(long, default_value = "2")]
    pub qs: String,
    /// `hi:lo:alpha` triples for the generalized estimator.
    #[arg(long)]
    pub pairs: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct RollArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "terminal", value_parser = parse_kind)]
    pub kind: EstimatorKind,
    /// Window resolution: windows hold 2^n + 1 samples.
    #[arg(long)]
    pub n: u32,
    #[command(flatten)]
    #[serde(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Largest number of windows before the stride is widened.
    #[arg(long, default_value_t = hurst_core::rolling::DEFAULT_MAX_WINDOWS)]
    pub max_windows: usize,
    /// Also write per-window rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Auto,
    Circulant,
    Dense,
}

impl From<MethodArg> for FbmMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => FbmMethod::Auto,
            MethodArg::Circulant => FbmMethod::Circulant,
            MethodArg::Dense => FbmMethod::Dense,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    #[arg(long, default_value = "gladyshev", value_parser = parse_kind)]
    pub estimator: EstimatorKind,
    #[arg(long)]
    pub n: u32,
    /// `lo..hi:step` or a comma list of Hurst parameters.
    #[arg(long = "H", value_name = "LIST")]
    pub h: String,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub profile: ProfileArgs,
    #[arg(long)]
    pub ks: Option<String>,
    #[arg(long, default_value = "2")]
    pub qs: String,
    /// Rescale each path to mean 0 and variance 1 before estimating.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    /// Format written to stdout when --output is not given.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Also write the summary table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Exponents for reverse Jensen and Burkholder ratios.
    #[arg(long, default_value = "1,2,4")]
    pub p: String,
    /// Deepest level for branch enumeration; default min(resolution, 16).
    #[arg(long)]
    pub max_level: Option<u32>,
    #[arg(long, default_value_t = 2)]
    pub nu_b: u32,
    #[arg(long, default_value_t = 2)]
    pub nu_q: u32,
    /// Candidate H checked against the bias rules.
    #[arg(long)]
    pub h_candidate: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

fn parse_kind(s: &str) -> Result<EstimatorKind, String> {
    s.parse().map_err(|e: HurstError| e.to_string())
}

/// Sizes the global rayon pool from [`THREADS_ENV`] when set.
fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer")))?;
    // A pool that already exists (e.g. in tests) is left alone.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

/// Runs the CLI, writing reports to `stdout` and messages to `stderr`.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let args = match config::expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    let outcome = configure_threads().and_then(|_| commands::dispatch(&cli.command, stdout));
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
