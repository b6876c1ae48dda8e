use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

/// Fair council weights for heterogeneous voting systems.
#[derive(Debug, Parser)]
#[command(name = "fairvote", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo workers; part of the reproducibility key (default 1).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Monte Carlo trials or samples (default 100000).
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Output file; metadata goes to `<out>.meta.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fair weights w = E|S|/2 for every state of a council.
    Weights(CouncilArgs),
    /// Expected margin E|S| of one state.
    Margin(MarginArgs),
    /// Democracy deficit for given weights.
    Delta(DeltaArgs),
    /// Power-law fit of the fair weight against population.
    Scaling(ScalingArgs),
    /// Positive root of tanh(J C) = C.
    SolveCj(SolveCjArgs),
    /// Linear versus square-root regime of a belief family.
    Regime(RegimeArgs),
    /// Margin bounds and Wasserstein distance of the mean vote.
    Distribution(DistributionArgs),
    /// Simulate referendums across a council.
    CouncilSim(SimArgs),
    /// Compare weight rules after optimal scaling.
    CompareRules(CouncilArgs),
    /// Run the invariant suite.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Independent,
    CommonBelief,
    Meanfield,
    Straffin,
}

/// A single model or a family indexed by population.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Mean-field coupling.
    #[arg(long = "J")]
    pub j: Option<f64>,
    /// Half-width of a uniform belief.
    #[arg(long)]
    pub a: Option<f64>,
    /// Straffin decay exponent.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Straffin prefactor.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exact,
    Mc,
    Asymptotic,
}

#[derive(Debug, Clone, Args)]
pub struct CouncilArgs {
    /// Council quota q in (0, 1); simple majority when absent.
    #[arg(long)]
    pub quota: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct MarginArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "N")]
    pub n: Option<u64>,
    /// Populations `lo:hi:xSTEP` instead of a single `--N`.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: Method,
    /// Regime band for asymptotic common-belief margins.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeltaModeArg {
    Exact,
    SemiExact,
    Mc,
}

#[derive(Debug, Clone, Args)]
pub struct DeltaArgs {
    #[command(flatten)]
    pub council: CouncilArgs,
    /// `optimal`, `minimizing` or a comma-separated list.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long, value_enum, default_value = "semi-exact")]
    pub mode: DeltaModeArg,
    /// Also report coordinate perturbations of this size.
    #[arg(long)]
    pub verify_step: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: Method,
}

#[derive(Debug, Clone, Args)]
pub struct SolveCjArgs {
    #[arg(long = "J")]
    pub j: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RegimeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundMethod {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Args)]
pub struct DistributionArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "N")]
    pub n: Option<u64>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: BoundMethod,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub council: CouncilArgs,
    /// `optimal`, `minimizing` or a comma-separated list.
    #[arg(long)]
    pub weights: Option<String>,
}
