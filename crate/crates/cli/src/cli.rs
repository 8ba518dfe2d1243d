use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bspf", version, about = "Bayesian forests of binary space partitioning trees")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a forest and write the model, posterior samples, trace and diagnostics.
    Train(TrainCmd),
    /// Predict with a saved model (posterior mean and 90% band with --samples).
    Predict(PredictCmd),
    /// Held-out RMAE over repeated random splits.
    Eval(EvalCmd),
    /// Generate a Friedman benchmark dataset.
    Friedman(FriedmanCmd),
    /// Train both cut modes over a grid of budgets.
    Sweep(SweepCmd),
    /// Partial-dependence curves from posterior samples.
    Pdp(PdpCmd),
    /// Per-dimension cut usage from posterior samples.
    Dimuse(DimuseCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Bsp,
    Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RmaeArg {
    SqrtMae,
    Mae,
}

/// Sampler and evaluation settings. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// TOML file of `key = value` settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short = 'm', long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Label column name or zero-based index (default: last column).
    #[arg(long)]
    pub label_col: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// multinomial or systematic.
    #[arg(long)]
    pub resampling: Option<String>,
    #[arg(long, value_enum)]
    pub rmae_variant: Option<RmaeArg>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    /// Training CSV with a header row.
    pub data: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = "bspf-out")]
    pub out: PathBuf,
    /// Write the model and samples as JSON instead of binary.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct PredictCmd {
    /// CSV with the training feature columns (label column optional).
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Posterior samples; predictions become posterior means with bands.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Prediction CSV (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sqrt-mae")]
    pub rmae_variant: RmaeArg,
}

#[derive(Debug, Args)]
pub struct EvalCmd {
    pub data: PathBuf,
    #[arg(short, long, default_value = "bspf-out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct FriedmanCmd {
    #[arg(short = 'n', long, default_value_t = 300)]
    pub rows: usize,
    #[arg(short, long, default_value_t = 10)]
    pub dims: usize,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write the noiseless function values, one per row.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    pub data: PathBuf,
    #[arg(short, long, default_value = "bspf-out")]
    pub out: PathBuf,
    /// Comma-separated budgets.
    #[arg(long, value_delimiter = ',', default_values_t = bspf::bench::DEFAULT_BUDGETS.to_vec())]
    pub budgets: Vec<f64>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct PdpCmd {
    /// Data whose rows are averaged over (training features).
    pub data: PathBuf,
    #[arg(long)]
    pub samples: PathBuf,
    /// Zero-based feature indices (default: all).
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DimuseCmd {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}
