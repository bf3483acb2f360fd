use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fdc_core::sweep::Learner;

#[derive(Debug, Parser)]
#[command(name = "fdc", version, about = "Functional complexity measures for black-box regression models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute NF, IAS and MEC for a model over a dataset.
    Measure(MeasureArgs),
    /// Export first-order ALE curves.
    Ale(AleArgs),
    /// Fit a built-in learner and write it as model JSON.
    Train(TrainArgs),
    /// Random search over built-in learners with a Pareto front over
    /// (MAE, NF, MEC, IAS).
    Sweep(SweepArgs),
    /// Serve a model JSON over the HTTP predict protocol.
    MockServer(ServerArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the target column; it is excluded from the features.
    #[arg(long)]
    pub target: String,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Arithmetic expression over the feature names.
    #[arg(long)]
    pub expr: Option<String>,
    /// Model JSON written by `fdc train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Base URL of a remote predictor; requests go to `<url>/predict`.
    #[arg(long)]
    pub endpoint: Option<String>,
}

#[derive(Debug, Args)]
pub struct HttpArgs {
    /// Rows per request for `--endpoint`.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch_size: u64,
    /// Per-request timeout in milliseconds.
    #[arg(long, default_value_t = 30_000)]
    pub timeout_ms: u64,
    /// Retries after a transport failure.
    #[arg(long, default_value_t = 2)]
    pub retries: usize,
}

#[derive(Debug, Args)]
pub struct MeasureConfigArgs {
    /// Maximum number of ALE intervals per numeric feature.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid_size: u64,
    /// MEC approximation tolerance: segments are added until R² >= 1 - epsilon.
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    /// Maximum number of linear segments per main effect.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_seg: u64,
    /// Rows sampled per feature for NF.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub nf_samples: u64,
    /// Prediction change that counts as a feature being used.
    #[arg(long, default_value_t = 0.0)]
    pub nf_tol: f64,
    #[arg(long, env = "FDC_SEED", default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub config: MeasureConfigArgs,
    #[command(flatten)]
    pub http: HttpArgs,
    /// Report destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the ALE curve export here.
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub http: HttpArgs,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid_size: u64,
    /// Export only this feature.
    #[arg(long)]
    pub feature: Option<String>,
    /// Destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LearnerArg {
    Ols,
    Lasso,
    Cart,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub learner: LearnerArg,
    /// L1 penalty (lasso, required).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Maximum tree depth (cart, required).
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Minimum rows per leaf (cart).
    #[arg(long, default_value_t = 1)]
    pub min_leaf: usize,
    /// Destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub iterations: u64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Comma-separated subset of ols, lasso, cart.
    #[arg(long, value_delimiter = ',', default_value = "ols,lasso,cart")]
    pub learners: Vec<Learner>,
    #[command(flatten)]
    pub config: MeasureConfigArgs,
    /// Candidate list destination.
    #[arg(long, default_value = "sweep.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServerArgs {
    /// Model JSON written by `fdc train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Port on 127.0.0.1; 0 picks a free port.
    #[arg(long)]
    pub port: u16,
}
