use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

/// Command-line configuration for `cw`.
#[derive(Debug, Parser)]
#[command(name = "cw", version, about = "Multi-group Curie-Weiss voting model")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw voting configurations and write them as CSV, with a summary sidecar.
    Sample(SampleArgs),
    /// Maximum-likelihood couplings with Wald intervals.
    Estimate(EstimateArgs),
    /// Optimal council weights, exact or plug-in.
    Weights(WeightsArgs),
    /// Exponential tail bounds.
    Bounds(BoundsArgs),
    /// Tabulate θ_N, Var S² and E|S| over a coupling grid.
    Moments(MomentsArgs),
    /// Brute-force moments by full enumeration (N ≤ 16).
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Group sizes, e.g. `5,7`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Couplings, one per group or a single value for all groups.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub beta: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of observations.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Configuration CSV; the summary goes to `<stem>.summary.json` beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "summary", "t"])))]
pub struct EstimateArgs {
    /// Configuration CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Summary JSON, bare or as written by `sample`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Inline statistics `T_λ`; needs `--sizes` and `--n`.
    #[arg(long, value_delimiter = ',', requires_all = ["sizes", "n"])]
    pub t: Option<Vec<f64>>,
    /// Group sizes; for CSV input they may instead come from the `# sizes=` header.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("couplings").required(true).args(["beta", "from_report"])))]
pub struct WeightsArgs {
    #[arg(long, value_delimiter = ',', requires = "beta")]
    pub sizes: Option<Vec<usize>>,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        requires = "sizes"
    )]
    pub beta: Option<Vec<f64>>,
    /// Estimate report written by `estimate`; gives plug-in weights.
    #[arg(long)]
    pub from_report: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundKind {
    #[value(name = "atypical-T", alias = "atypical-t")]
    AtypicalT,
    #[value(name = "atypical-beta-hat")]
    AtypicalBetaHat,
    #[value(name = "closed-set")]
    ClosedSet,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sample size.
    #[arg(long)]
    pub n: u64,
    #[arg(long, value_enum)]
    pub kind: BoundKind,
    /// Per group, a union of closed intervals `lo:hi[,lo:hi...]`; repeat once per group.
    #[arg(long, allow_hyphen_values = true)]
    pub set: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// `start:stop:step`, both ends inclusive.
    #[arg(long, allow_hyphen_values = true)]
    pub beta_grid: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
