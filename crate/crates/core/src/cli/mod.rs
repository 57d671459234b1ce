//! The `mallflow` command line.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage error, 3 data error,
//! 4 model/config mismatch.

mod commands;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::graph::CorridorStyle;
use crate::prob::CountMode;

pub const EXIT_CHECK: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_MISMATCH: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "mallflow", version, about = "Corridor usage datasets and edge-regression models for mall graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate mall graphs.
    Gen(GenArgs),
    /// Build a dataset of featured samples with targets.
    Synth(SynthArgs),
    /// Train a model on a dataset's training split.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Write per-edge betweenness centrality.
    Centrality(CentralityArgs),
    /// Compare exact targets against a Monte Carlo walker simulation.
    McCheck(McCheckArgs),
    /// Draw a mall as SVG, optionally colouring edges by per-edge values.
    Render(RenderArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Synth(_) => "synth",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Centrality(_) => "centrality",
            Command::McCheck(_) => "mc-check",
            Command::Render(_) => "render",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StyleArg {
    Loop,
    Grid,
    Spine,
}

impl From<StyleArg> for CorridorStyle {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Loop => CorridorStyle::Loop,
            StyleArg::Grid => CorridorStyle::Grid,
            StyleArg::Spine => CorridorStyle::Spine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountArg {
    Expected,
    Sampled,
}

impl From<CountArg> for CountMode {
    fn from(c: CountArg) -> Self {
        match c {
            CountArg::Expected => CountMode::Expected,
            CountArg::Sampled => CountMode::Sampled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// Number of malls; mall p uses seed `seed + p`.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub malls: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub shops: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub entrances: u64,
    #[arg(long, value_enum, default_value_t = StyleArg::Loop)]
    pub style: StyleArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// A mall file or a directory of mall files.
    #[arg(long)]
    pub malls: PathBuf,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    /// Training samples per mall; defaults to four fifths of `--samples`.
    #[arg(long)]
    pub train_per_mall: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub ma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    /// Spread of both category distributions.
    #[arg(long, default_value_t = 1.1)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = CountArg::Expected)]
    pub counts: CountArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output dataset directory.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Drop graph-level features from the edge predictor input.
    #[arg(long)]
    pub no_graph_features: bool,
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u64).range(1..))]
    pub blocks: u64,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub hidden: u64,
    /// Checkpoint path.
    #[arg(short, long, default_value = "model.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "curve.csv")]
    pub curve: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    /// Prediction table path.
    #[arg(short, long, default_value = "predictions.csv")]
    pub out: PathBuf,
    #[arg(long, default_value = "metrics.json")]
    pub metrics: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CentralityArgs {
    #[arg(long)]
    pub mall: PathBuf,
    #[arg(short, long, default_value = "centrality.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct McCheckArgs {
    #[arg(long)]
    pub mall: PathBuf,
    /// Seed of the shop assignment being checked.
    #[arg(long, default_value_t = 0)]
    pub sample_seed: u64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub walkers: u64,
    /// Seed of the walker stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub ma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.1)]
    pub sigma: f64,
    /// Minimum fraction of edges inside the bound.
    #[arg(long, default_value_t = 0.99)]
    pub min_fraction: f64,
    /// Optional JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RenderArgs {
    #[arg(long)]
    pub mall: PathBuf,
    /// CSV with one row per edge in canonical order.
    #[arg(long)]
    pub values: Option<PathBuf>,
    /// Column of `--values` to use; defaults to the last.
    #[arg(long, requires = "values")]
    pub column: Option<String>,
    #[arg(short, long, default_value = "mall.svg")]
    pub out: PathBuf,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl Failure {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure {
            code: EXIT_USAGE,
            error: anyhow::anyhow!("{msg}"),
        }
    }
}

pub(crate) trait ExitContext<T> {
    fn or_exit(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitContext<T> for Result<T, E> {
    fn or_exit(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

/// Runs one parsed command and returns its exit code.
pub fn run(cli: Cli) -> Result<u8, Failure> {
    let name = cli.command.name();
    match &cli.command {
        Command::Gen(a) => commands::gen(name, a),
        Command::Synth(a) => commands::synth(name, a),
        Command::Train(a) => commands::train(name, a),
        Command::Eval(a) => commands::eval(name, a),
        Command::Centrality(a) => commands::centrality(name, a),
        Command::McCheck(a) => commands::mc_check(name, a),
        Command::Render(a) => commands::render(name, a),
    }
}

/// Parses `args`, runs the command and reports errors on stderr.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}

pub fn main() -> ExitCode {
    ExitCode::from(main_with(std::env::args_os()))
}
