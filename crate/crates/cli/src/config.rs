//! Command-line configuration.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Parser)]
#[command(name = "privlp", version, about = "Differentially private LP feasibility experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate an instance in the integer text format.
    Gen(GenArgs),
    /// Run the private perceptron on homogeneous instances.
    SolveHomogeneous(SolveArgs),
    /// Run the general solver on `Ax <= b, x >= 0` instances.
    SolveGeneral(GeneralArgs),
    /// Generate and solve homogeneous instances over a parameter grid.
    Sweep(SweepArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKindArg {
    PositiveMargin,
    TightSubspace,
    NeighborPair,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKindArg,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    /// Entry bound; for positive-margin instances the integer scale.
    #[arg(long = "u", visible_alias = "U", default_value_t = 1000)]
    pub u: i64,
    /// Target margin of positive-margin instances.
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    /// Planted equalities of tight-subspace instances.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Copies of each planted inequality.
    #[arg(long, default_value_t = 1)]
    pub multiplicity: usize,
    #[arg(long, env = "PRIVLP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where neighbor-pair writes the instance with the extra row.
    #[arg(long)]
    pub neighbor_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct BudgetArgs {
    #[arg(long = "eps", default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ConstantArgs {
    #[arg(long = "c-t", default_value_t = 1.0)]
    pub c_t: f64,
    #[arg(long = "c-tau", default_value_t = 10.0)]
    pub c_tau: f64,
    #[arg(long = "c-nu", default_value_t = 1.0)]
    pub c_nu: f64,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, env = "PRIVLP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary destination.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Fill `wall_ms`; otherwise it is 0 so output stays reproducible.
    #[arg(long)]
    pub record_timing: bool,
    /// Turn every noise source off. Rejected in release builds.
    #[arg(long)]
    pub noise_off: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Instance files or directories of `.lp` files.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Margin parameter; defaults to the exact margin for d <= 4.
    #[arg(long)]
    pub rho0: Option<f64>,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[command(flatten)]
    pub constants: ConstantArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SanitizerArg {
    Reference,
    Private,
}

#[derive(Debug, Clone, Args)]
pub struct GeneralArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = SanitizerArg::Reference)]
    pub sanitizer: SanitizerArg,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[command(flatten)]
    pub constants: ConstantArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long = "d", value_delimiter = ',', default_values_t = vec![2, 3])]
    pub dims: Vec<usize>,
    #[arg(long = "rho", value_delimiter = ',', default_values_t = vec![0.1, 0.2])]
    pub rhos: Vec<f64>,
    #[arg(long = "eps", value_delimiter = ',', default_values_t = vec![1.0])]
    pub epsilons: Vec<f64>,
    #[arg(long = "delta", value_delimiter = ',', default_values_t = vec![1e-6])]
    pub deltas: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[command(flatten)]
    pub constants: ConstantArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Sensitivity,
    Calibration,
    Volume,
    Reduction,
    Utility,
    Elimination,
    Tightness,
    General,
    Accounting,
    Determinism,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: SuiteArg,
    /// Smaller sample sizes, for smoke runs.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, env = "PRIVLP_SEED", default_value_t = 0)]
    pub seed: u64,
}
