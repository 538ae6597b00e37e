use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "natcop",
    version,
    about = "Natural copula estimation for two-sided price-level data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic `price,volume,side` CSV from a preset.
    Synth(SynthArgs),
    /// Fit both marginals.
    Fit(PipelineArgs),
    /// Fit marginals and estimate the copula.
    Copula(PipelineArgs),
    /// Circulation, flux and velocity field of the copula.
    Hydro(PipelineArgs),
    /// Correlation measure of the copula.
    Corr(PipelineArgs),
    /// Every stage in one report.
    Run(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetName {
    Ibm,
    Spdr,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "ibm")]
    pub preset: PresetName,
    /// Buy-side coefficients c_1..c_4, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        num_args = 4,
        allow_negative_numbers = true
    )]
    pub buy_coeffs: Option<Vec<f64>>,
    /// Sell-side coefficients c_1..c_4, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        num_args = 4,
        allow_negative_numbers = true
    )]
    pub sell_coeffs: Option<Vec<f64>>,
    #[arg(long)]
    pub buy_volume: Option<f64>,
    #[arg(long)]
    pub sell_volume: Option<f64>,
    #[arg(long)]
    pub buy_center: Option<f64>,
    #[arg(long)]
    pub sell_center: Option<f64>,
    /// Width σ_p for both sides.
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Price levels per side.
    #[arg(long, default_value_t = 64)]
    pub levels: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of multiplicative volume noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Output CSV file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PotentialArg {
    Density,
    Cdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Paper,
    Counterclockwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestPotential {
    /// V = xy
    Xy,
    /// V = x² + y²
    Bowl,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// `price,volume,side` CSV.
    #[arg(long, required_unless_present_any = ["uniform", "test_potential"])]
    pub input: Option<PathBuf>,
    /// Use uniform marginals instead of fitted ones.
    #[arg(long, conflicts_with = "input")]
    pub uniform: bool,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(6..=4096))]
    pub bins: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=64))]
    pub ma_order: u64,
    /// Monomials x^j y^k as `jk` pairs, e.g. `11,21,12,22`.
    #[arg(long, default_value = "11,21,12,22")]
    pub basis: String,
    /// Force τ ≡ 1 (empty basis).
    #[arg(long)]
    pub product: bool,
    /// Nonnegativity grid per axis.
    #[arg(long, default_value_t = 21, value_parser = clap::value_parser!(u64).range(2..=201))]
    pub grid_n: u64,
    /// Gauss–Legendre points per segment.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..=256))]
    pub quad_n: u64,
    /// Match marginal moments up to this order.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u64).range(0..=4))]
    pub moment_constraints: u64,
    #[arg(long, value_enum, default_value = "density")]
    pub potential: PotentialArg,
    #[arg(long, value_enum, default_value = "paper")]
    pub contour_convention: ConventionArg,
    /// Replace the copula potential by an analytic test potential.
    #[arg(long, value_enum)]
    pub test_potential: Option<TestPotential>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    /// Output directory for report and grid files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fixed ξ used when fitting.
    #[arg(long, default_value_t = 1.0)]
    pub xi: f64,
    /// Points per axis of exported grids.
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u64).range(2..=1001))]
    pub grid_res: u64,
}
