//! `wfc`: compile, inspect, validate, and deploy workflow trade-off sets.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod tables;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wfc_core::ExecutionModel;

use crate::config::FileConfig;
use crate::error::{CliError, EXIT_INPUT, EXIT_INTERNAL, EXIT_OK};

#[derive(Debug, Parser)]
#[command(
    name = "wfc",
    version,
    about = "Accuracy/latency trade-off compiler for structured LLM workflows"
)]
pub struct Cli {
    /// TOML file supplying defaults for flags not given on the command line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExecArg {
    SequentialEdge,
    CriticalPath,
}

impl From<ExecArg> for ExecutionModel {
    fn from(e: ExecArg) -> Self {
        match e {
            ExecArg::SequentialEdge => ExecutionModel::SequentialEdge,
            ExecArg::CriticalPath => ExecutionModel::CriticalPath,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ValidateMode {
    Frontier,
    Order,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the compiled trade-off set of a workflow.
    Compile(CompileArgs),
    /// Report design-space sizes before and after per-role pruning.
    Count(CountArgs),
    /// Pick one configuration by latency budget or preference.
    Select(SelectArgs),
    /// Preference selection over a grid of alphas.
    Sweep(SweepArgs),
    /// Mean utility under per-query random preferences.
    HeteroEval(HeteroArgs),
    /// Nearest-neighbor routing of query feature vectors.
    Route(RouteArgs),
    /// Measure every compiled configuration in the simulator.
    Simulate(SimulateArgs),
    /// Check estimates against simulated measurements.
    Validate(ValidateArgs),
    /// Tidy CSV of estimates, measurements, and frontier flags.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Profile table (JSON, or CSV by `.csv` extension).
    #[arg(long)]
    pub profiles: PathBuf,
    #[arg(long, value_enum)]
    pub exec: Option<ExecArg>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub restriction: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Enumerate every declared option instead of the per-role frontier.
    #[arg(long)]
    pub no_prune: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub restriction: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["budget", "alpha"])))]
pub struct SelectArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    /// Latency budget in seconds.
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Latency normalizer; defaults to the largest estimated latency.
    #[arg(long)]
    pub lmax: Option<f64>,
    #[arg(long, value_enum)]
    pub exec: Option<ExecArg>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub lmax: Option<f64>,
    /// Measurement CSV used to score the selections.
    #[arg(long)]
    pub measured: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeteroArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    #[arg(long)]
    pub measured: PathBuf,
    #[arg(long)]
    pub queries: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lmax: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    /// Routing-records JSON.
    #[arg(long)]
    pub records: PathBuf,
    /// JSON `{"dim": d, "queries": [[...], ...]}`.
    #[arg(long, conflicts_with = "features")]
    pub queries: Option<PathBuf>,
    /// One comma-separated feature vector.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub features: Option<Vec<f64>>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lmax: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Queries per configuration.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Replaces the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub exec: Option<ExecArg>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    pub mode: ValidateMode,
    /// Required in order mode; in frontier mode its ids are compared with the proxy frontier.
    #[arg(long)]
    pub artifact: Option<PathBuf>,
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Profile table for estimating every configuration (frontier mode).
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    #[arg(long)]
    pub restriction: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of compiled entries to sample (order mode).
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Largest space measured exhaustively (frontier mode).
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long, value_enum)]
    pub exec: Option<ExecArg>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long = "artifact", required = true)]
    pub artifacts: Vec<PathBuf>,
    #[arg(long)]
    pub measured: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments, runs one command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            if code == EXIT_OK {
                print!("{e}");
            } else {
                eprintln!(
                    "{}",
                    CliError::input("usage", e.to_string().trim_end()).report()
                );
            }
            return code;
        }
    };
    let outcome = std::panic::catch_unwind(|| {
        let config = match &cli.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        commands::dispatch(&cli.command, &config)
    });
    match outcome {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("{}", e.report());
            e.code
        }
        Err(_) => {
            eprintln!(
                "{}",
                CliError::internal("internal invariant violated").report()
            );
            EXIT_INTERNAL
        }
    }
}
