use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

/// Output directory override, used when `--out-dir` is absent.
pub const OUT_DIR_ENV: &str = "MCF_TTDL_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "mcf-ttdl", version, about = "Multicore-fiber true time delay line simulator")]
pub struct Cli {
    /// Fiber design file (TOML). Defaults to the bundled 7-core design.
    #[arg(long, global = true)]
    pub design: Option<PathBuf>,

    /// Directory for CSV, plot and manifest files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// Also write gnuplot command files next to each CSV.
    #[arg(long, global = true)]
    pub plot: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    /// Per-core group delays.
    Delays(DelaysArgs),
    /// FIR filter transfer function.
    Filter(FilterArgs),
    /// Phased-array radiation pattern.
    Beamform(BeamformArgs),
    /// Bend-induced group-delay variation versus bend radius.
    Bend(BendArgs),
    /// Twist-averaged delays under a constant bend.
    Twist(TwistArgs),
    /// Worst-case crosstalk versus bend radius.
    Xtalk(XtalkArgs),
    /// Fabrication-tolerance Monte Carlo with delay compensation.
    Tolerance(ToleranceArgs),
    /// Core geometries for target dispersions and a common group delay.
    Design(DesignArgs),
    /// Every figure-level study against the loaded design.
    Reproduce(ReproduceArgs),
    /// Check a design file and report every violation.
    Validate(ValidateArgs),
    /// Re-run the command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DelaysArgs {
    /// Wavelengths, nm.
    #[arg(long = "wavelength", value_delimiter = ',', default_values_t = vec![1550.0])]
    pub wavelengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FilterArgs {
    #[arg(long = "wavelength", value_delimiter = ',', default_values_t = vec![1560.0, 1575.0])]
    pub wavelengths: Vec<f64>,
    /// Link length override, km.
    #[arg(long)]
    pub length_km: Option<f64>,
    /// Real tap weights, one per core; uniform when absent.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    pub f_start_hz: f64,
    #[arg(long, default_value_t = 20e9)]
    pub f_stop_hz: f64,
    #[arg(long, default_value_t = 10e6)]
    pub f_step_hz: f64,
    /// Use the full per-core delays (slope terms included).
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BeamformArgs {
    #[arg(long = "wavelength", value_delimiter = ',', default_values_t = vec![1560.0, 1575.0])]
    pub wavelengths: Vec<f64>,
    #[arg(long)]
    pub length_km: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Antenna element spacing, m.
    #[arg(long, default_value_t = 0.03)]
    pub spacing_m: f64,
    /// RF carrier, Hz.
    #[arg(long, default_value_t = 5e9)]
    pub carrier_hz: f64,
    #[arg(long, default_value_t = 0.1)]
    pub angle_step_deg: f64,
    /// Write angles in the polar-plot convention (broadside at 90°).
    #[arg(long)]
    pub polar: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BendArgs {
    #[arg(long, default_value_t = 1550.0)]
    pub wavelength: f64,
    #[arg(long, default_value_t = 50.0)]
    pub r_start_mm: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub r_stop_mm: f64,
    #[arg(long, default_value_t = 10.0)]
    pub r_step_mm: f64,
    /// Core angle from the bend direction, degrees.
    #[arg(long, default_value_t = 0.0)]
    pub theta_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TwistArgs {
    #[arg(long, default_value_t = 1550.0)]
    pub wavelength: f64,
    #[arg(long, default_value_t = 100.0)]
    pub radius_mm: f64,
    #[arg(long, default_value_t = 1)]
    pub turns: u32,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct XtalkArgs {
    #[arg(long, default_value_t = 20.0)]
    pub r_start_mm: f64,
    #[arg(long, default_value_t = 500.0)]
    pub r_stop_mm: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r_step_mm: f64,
    /// Straight-fiber crosstalk floor the coupling is calibrated to, dB.
    #[arg(long, default_value_t = -90.0, allow_negative_numbers = true)]
    pub floor_db: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ToleranceArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Uniform core-radius error half-width, μm.
    #[arg(long, default_value_t = 0.1)]
    pub halfwidth_um: f64,
    #[arg(long = "wavelength", value_delimiter = ',', default_values_t = vec![1530.0, 1535.0, 1540.0, 1545.0, 1550.0, 1555.0, 1560.0, 1565.0, 1570.0])]
    pub wavelengths: Vec<f64>,
    /// Re-solve every perturbed core instead of using linear sensitivities.
    #[arg(long)]
    pub resolve: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DesignArgs {
    /// Targets and bounds (TOML). Defaults to D = 14.75…20.75 in steps of 1.
    #[arg(long)]
    pub targets: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReproduceArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ValidateArgs {
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}
