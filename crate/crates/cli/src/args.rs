use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "heavy-rmt", version, about = "Spectra of heavy-tailed random matrices")]
pub struct Cli {
    /// Output directory, created when missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Root seed of every Monte Carlo stream.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "HEAVY_RMT_WORKERS")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stable density on a uniform grid: columns x, density.
    StablePdf(StablePdfArgs),
    /// Wigner-Levy eigenvalue density: columns lambda, density, tail_asymptote.
    WlDensity(WlDensityArgs),
    /// Free stable density: columns lambda, density, green_re, green_im.
    FreeDensity(FreeArgs),
    /// Free stable confining potential: columns lambda, potential.
    FreePotential(FreeArgs),
    /// Free convolution of two or more laws: columns lambda, density.
    FreeAdd(FreeAddArgs),
    /// Monte Carlo spectral histogram of an ensemble config.
    McSpectrum(McSpectrumArgs),
    /// Monte Carlo unfolded level spacings of an ensemble config.
    McSpacing(McSpacingArgs),
    /// Monte Carlo element and eigenvector inverse participation ratios.
    McIpr(McIprArgs),
    /// Density of a scale-mixed Wigner or Wishart ensemble.
    DeformedDensity(DeformedArgs),
    /// Wigner-Levy density against the Monte Carlo histogram (200x200 matrices).
    Fig1(Fig1Args),
    /// Level spacings of sums of rotated diagonal matrices.
    Fig2(Fig2Args),
    /// Free sums of K Wigner-Levy matrices against the free stable density.
    Fig3(Fig3Args),
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Grid {
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    pub xmin: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub xmax: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Bins {
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    pub lmin: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub lmax: f64,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct StablePdfArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub range: f64,
    #[command(flatten)]
    pub grid: Grid,
}

#[derive(Debug, Args)]
pub struct WlDensityArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub range: f64,
    #[command(flatten)]
    pub grid: Grid,
    /// Half-width of the solver grid in units of the natural scale.
    #[arg(long, default_value_t = 50.0)]
    pub x_max: f64,
    /// Odd solver node count.
    #[arg(long, default_value_t = 801)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct FreeArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub range: f64,
    #[command(flatten)]
    pub grid: Grid,
}

#[derive(Debug, Args)]
pub struct FreeAddArgs {
    /// `free-stable:ALPHA[:BETA[:RANGE]]`, `semicircle:RADIUS` or
    /// `table:PATH` (CSV with header and columns x, density).
    #[arg(long = "law", required = true, num_args = 1)]
    pub laws: Vec<String>,
    #[command(flatten)]
    pub grid: Grid,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct McSpectrumArgs {
    /// Ensemble config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub bins: Bins,
    /// Also write one eigenvalue CSV per trial.
    #[arg(long)]
    pub dump_eigenvalues: bool,
}

#[derive(Debug, Args)]
pub struct McSpacingArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Central fraction of each spectrum used for spacings.
    #[arg(long, default_value_t = 0.5)]
    pub bulk: f64,
    #[arg(long, default_value_t = 4.0)]
    pub smax: f64,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct McIprArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Also diagonalize and group eigenvector IPRs by |lambda|.
    #[arg(long)]
    pub vectors: bool,
    /// Equal-count |lambda| groups for the eigenvector IPR.
    #[arg(long, default_value_t = 10)]
    pub groups: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeformedKind {
    Wigner,
    Wishart,
}

#[derive(Debug, Args)]
pub struct DeformedArgs {
    #[arg(long, value_enum)]
    pub ensemble: DeformedKind,
    #[arg(long)]
    pub alpha: f64,
    /// Student scale; defaults to sqrt(alpha), the only value for wishart.
    #[arg(long)]
    pub a: Option<f64>,
    /// N/T for the Wishart ensemble.
    #[arg(long, default_value_t = 0.25)]
    pub ratio: f64,
    #[command(flatten)]
    pub grid: Grid,
}

#[derive(Debug, Args)]
pub struct Fig1Args {
    #[arg(long, default_value_t = 1.5)]
    pub alpha: f64,
    #[arg(long = "N", default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub matrices: usize,
    #[command(flatten)]
    pub bins: Bins,
}

#[derive(Debug, Args)]
pub struct Fig2Args {
    /// Number of rotated terms; repeat for several panels.
    #[arg(long = "K", default_values_t = [1, 2])]
    pub k: Vec<usize>,
    #[arg(long = "N", default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Radius of the semicircle law of the diagonal entries.
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.5)]
    pub bulk: f64,
    #[arg(long, default_value_t = 4.0)]
    pub smax: f64,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct Fig3Args {
    #[arg(long, default_value_t = 1.5)]
    pub alpha: f64,
    #[arg(long = "K", default_value_t = 32)]
    pub k: usize,
    #[arg(long = "N", default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[command(flatten)]
    pub bins: Bins,
}
