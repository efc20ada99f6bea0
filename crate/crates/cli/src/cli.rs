use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "churnlab", version, about = "Churn, calibration and rejection-loss experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a loss or link on a grid and write `losscurve_<loss>.csv`.
    Losscurve(LossCurveArgs),
    /// Check the churn inequalities on seeded random predictions.
    Bounds(BoundsArgs),
    /// Train seed pairs per regularization strength and compare their churn.
    Churn(RunArgs),
    /// Train dual encoders per ranking loss and compare retrieval quality.
    Retrieval(RunArgs),
    /// Optimal reject-surrogate score as a function of P(y = 1).
    Rejectmap(RejectMapArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveLoss {
    Entropic,
    Kl,
    Reject,
    Link,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveForm {
    /// x is a probability of the label.
    Log,
    /// x is a real score passed through the sigmoid.
    Logistic,
}

#[derive(Debug, Args)]
pub struct LossCurveArgs {
    #[arg(long, value_enum)]
    pub loss: CurveLoss,
    /// Input form for `entropic` and `kl`.
    #[arg(long, value_enum, default_value = "log")]
    pub form: CurveForm,
    /// Regularization strengths, or surrogate sharpness for `reject`/`link`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Vec<f64>,
    /// Rejection cost for `reject` and `link`.
    #[arg(long, default_value_t = 0.3)]
    pub d: f64,
    /// Binary label for `entropic` and `kl`.
    #[arg(long, default_value_t = 1)]
    pub label: usize,
    /// `LO:HI:N`, N evenly spaced points including both ends.
    #[arg(long, conflicts_with = "points")]
    pub grid: Option<String>,
    /// Explicit comma-separated grid points.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub points: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Random prediction pairs per class count.
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "2,3,5,10")]
    pub classes: Vec<usize>,
    /// Directory for `bounds.json`; the report is printed either way.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RejectMapArgs {
    #[arg(long, default_value_t = 0.3)]
    pub d: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,32")]
    pub alpha: Vec<f64>,
    /// `LO:HI:N` grid over P(y = 1).
    #[arg(long, default_value = "0.01:0.99:99")]
    pub grid: String,
    #[arg(long)]
    pub out: PathBuf,
}
