use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vbstereo::scenario::{ApertureShape, BaselineMode};

#[derive(Debug, Parser)]
#[command(name = "vbstereo", version, about = "Variable-baseline stereo analyses and comparative episodes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibration-error ratio table and per-parameter magnitude sweeps.
    AnalyzeErrors(AnalyzeArgs),
    /// Largest velocity per baseline and sync offset for a disparity bound.
    SyncLimits(SyncArgs),
    /// Actuator regression and interpolated extrinsics across the stroke.
    Calib(CalibArgs),
    /// Forest traversal toward a goal.
    SimForest(SimArgs),
    /// Approach and traversal of an apertured wall.
    SimGap(GapArgs),
    /// Detection and tracking of a receding object.
    SimImo(SimArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, env = "VBSTEREO_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Rig calibration file (TOML).
    #[arg(long)]
    pub rig: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Focal lengths in millimetres.
    #[arg(long, value_delimiter = ',')]
    pub focal: Option<Vec<f64>>,
    /// Number of magnitudes in each sweep.
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SyncArgs {
    #[command(flatten)]
    pub common: Common,
    /// Disparity error bound, pixels.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Scene depth, metres.
    #[arg(long, default_value_t = 2.0)]
    pub depth: f64,
    /// Focal length, pixels.
    #[arg(long, default_value_t = 100.0)]
    pub focal: f64,
    /// Values per axis of the sweep.
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CalibArgs {
    #[command(flatten)]
    pub common: Common,
    /// Commanded positions across the stroke.
    #[arg(long, default_value_t = 10)]
    pub positions: usize,
    /// Interpolated poses written across the stroke.
    #[arg(long, default_value_t = 21)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scene file (TOML) replacing the reference scene.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// One arm, `fixed:<m>` or `variable:<K>`; all three arms when absent.
    #[arg(long)]
    pub baseline: Option<BaselineMode>,
    /// Gain of the variable arm in comparative runs.
    #[arg(long, default_value_t = vbstereo::control::DEFAULT_BASELINE_GAIN)]
    pub gain: f64,
    /// Episode length in steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Control rate, Hz.
    #[arg(long, default_value_t = 10.0)]
    pub rate: f64,
    /// Run comparative arms concurrently.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GapArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_enum, default_value_t = Aperture::Rectangle)]
    pub aperture: Aperture,
    /// Image point the policy centres.
    #[arg(long, value_enum, default_value_t = Target::Aperture)]
    pub target: Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Aperture {
    Rectangle,
    Triangle,
    Hexagon,
}

impl From<Aperture> for ApertureShape {
    fn from(a: Aperture) -> Self {
        match a {
            Aperture::Rectangle => ApertureShape::Rectangle,
            Aperture::Triangle => ApertureShape::Triangle,
            Aperture::Hexagon => ApertureShape::Hexagon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// Median of the larger depth cluster.
    SafestPoint,
    /// Median of the far cluster.
    Aperture,
}
