use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "patchflow",
    version,
    about = "Contour dynamics of patch transport equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario; writes diagnostics, snapshots and a manifest.
    Simulate {
        config: PathBuf,
        /// Output directory (overrides the environment and the scenario).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the diagnostics of a finished run from its snapshots.
    Diagnose {
        run_dir: PathBuf,
        /// Destination CSV; defaults to `diagnostics_recomputed.csv` in the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the jet constant bound for the unit normal of a curve.
    VerifyLemma1 {
        #[command(flatten)]
        source: CurveSource,
    },
    /// Whitney-extend the unit tangent field and sample it on a grid.
    Extend {
        #[command(flatten)]
        source: CurveSource,
        /// Grid points per side.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Extra margin around the bounding box, in units of the diameter.
        #[arg(long, default_value_t = 0.25)]
        margin: f64,
        #[arg(long)]
        collar: Option<f64>,
        #[arg(long)]
        min_depth: Option<usize>,
        #[arg(long)]
        max_depth: Option<usize>,
        /// Destination CSV; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare both sides of the commutator identity at sampled markers.
    CommutatorCheck {
        #[command(flatten)]
        source: CurveSource,
        /// Kernel, e.g. `biot_savart` or `0.5*biot_savart+0.5*grad_n`.
        #[arg(long, conflicts_with = "config")]
        kernel: Option<String>,
        #[arg(long)]
        angular_nodes: Option<usize>,
        #[arg(long)]
        gauss_order: Option<usize>,
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Destination JSON; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncation sweep of an even kernel over the patch at a point.
    Tstar {
        #[command(flatten)]
        source: CurveSource,
        /// Evaluation point `x,y`.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// `bs11`, `bs12`, `bs21`, `bs22`, `gn11`, ..., or `cos2`.
        #[arg(long, default_value = "bs11")]
        kernel_entry: String,
        #[arg(long)]
        eps_min: Option<f64>,
        #[arg(long)]
        eps_max: Option<f64>,
        #[arg(long, default_value_t = 40)]
        n_eps: usize,
        #[arg(long, default_value_t = 4096)]
        angular_nodes: usize,
        /// Largest number of (direction, radius) evaluations.
        #[arg(long, default_value_t = 10_000_000)]
        budget: usize,
        /// Destination CSV; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a gnuplot script for the CSVs of a run directory.
    EmitPlots { run_dir: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Circle,
    Ellipse,
    PerturbedCircle,
}

/// A curve given by a scenario file, a preset or a curve CSV.
#[derive(Debug, Clone, Args)]
pub struct CurveSource {
    /// Scenario file supplying shape, kernel and diagnostics settings.
    #[arg(long, conflicts_with_all = ["shape", "curve"])]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "curve")]
    pub shape: Option<ShapeArg>,
    /// Curve CSV with columns `theta,x,y`.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Number of markers for presets.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub gamma: Option<f64>,
}
