use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conepack_core::mutual_info::WidebandVariant;
use conepack_core::Measure;

/// Design and evaluate constellations for IM/DD links with one subcarrier.
///
/// Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 numerical
/// failure such as an infeasible packing.
#[derive(Debug, Parser)]
#[command(name = "conepack", version, about, long_about = None)]
pub struct Cli {
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true, env = "CONEPACK_THREADS")]
    pub threads: Option<usize>,

    /// Where to write the run manifest. Defaults to `<out>.manifest.json`
    /// when the command has `--out`, and to stderr otherwise.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multistart search for a power-minimal packing.
    Optimize(OptimizeArgs),
    /// Best subset of the FCC lattice inside the cone.
    Lattice(LatticeArgs),
    /// Symbol error rate curve from simulation next to the analytic models.
    Ser(SerArgs),
    /// Spectral efficiency curve from mutual information.
    Mi(MiArgs),
    /// Asymptotic power gains over OOK.
    Gains(TableArgs),
    /// Zero-crossings of the spectral efficiency and wideband bounds.
    ZeroCrossings(TableArgs),
    /// Built-in constellations.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Wideband-optimal constellation with M-1 points at the apex.
    Wideband(WidebandArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MeasureArg {
    AvgElectrical,
    AvgOptical,
    PeakOptical,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::AvgElectrical => Measure::AvgElectrical,
            MeasureArg::AvgOptical => Measure::AvgOptical,
            MeasureArg::PeakOptical => Measure::PeakOptical,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    AxisE,
    BoundaryO,
}

impl From<VariantArg> for WidebandVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::AxisE => WidebandVariant::AxisE,
            VariantArg::BoundaryO => WidebandVariant::BoundaryO,
        }
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Number of points.
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum)]
    pub objective: MeasureArg,
    #[arg(long, default_value_t = 200)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// L-BFGS iteration budget per restart.
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 10.0)]
    pub penalty_growth: f64,
    /// Height of the region initial points are drawn from (default 3 M^(1/3)).
    #[arg(long)]
    pub init_box_height: Option<f64>,
    /// Output constellation JSON (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-restart diagnostics JSON. Defaults to `<out>.diagnostics.json`.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum)]
    pub objective: MeasureArg,
    /// Highest layer enumerated; raised automatically while it matters.
    #[arg(long)]
    pub height_cap: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Constellation JSON file.
    #[arg(long)]
    pub constellation: Option<PathBuf>,
    /// Catalog entry name (see `conepack catalog list`).
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct Grid {
    #[arg(long, allow_negative_numbers = true)]
    pub snr_start: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub snr_stop: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct SerArgs {
    #[command(flatten)]
    pub source: Source,
    /// SNR measure of the grid.
    #[arg(long, value_enum, default_value = "avg-electrical")]
    pub measure: MeasureArg,
    #[command(flatten)]
    pub grid: Grid,
    /// Monte Carlo symbols per grid point (accepts 1e6); 0 skips simulation.
    #[arg(long, default_value = "1e6", value_parser = parse_count)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative tolerance for counting minimum-distance pairs. Defaults to
    /// 1e-9, or 1e-3 for catalog entries with 4-decimal coordinates.
    #[arg(long)]
    pub pair_tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MiArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value = "avg-electrical")]
    pub measure: MeasureArg,
    #[command(flatten)]
    pub grid: Grid,
    /// Monte Carlo noise samples (accepts 1e5).
    #[arg(long, default_value = "1e5", value_parser = parse_count)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use a Gauss-Hermite rule of this order per dimension instead of
    /// Monte Carlo.
    #[arg(long)]
    pub gauss_hermite: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Every catalog entry.
    #[arg(long, conflicts_with = "constellation")]
    pub all_catalog: bool,
    /// Constellation JSON files (repeatable).
    #[arg(long, required_unless_present = "all_catalog")]
    pub constellation: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    /// One CSV row per entry.
    List {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write an entry as constellation JSON.
    Export {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct WidebandArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    /// Average symbol energy.
    #[arg(long, default_value_t = 1.0)]
    pub es: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("`{s}` is not a non-negative integer"))
    }
}
