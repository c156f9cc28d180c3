//! Closed-loop episodes that run the policies against synthetic scenes.
//!
//! Every arm of a comparison sees the same scene and draws its actuator
//! noise from an identically seeded stream, so arms differ only in how they
//! command the baseline.

mod forest;
mod gap;
mod imo;
mod log;

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::BaselineLimits;
use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{
    depth_image_from_disparity, CameraIntrinsics, CameraModel, DepthImage, DisparityImage, ImageSize, RayGrid,
    StereoCalibration,
};
use crate::rig::{command_baseline, ActuatorModel, BaselineCommand};
use crate::sim::{render_depth, synthesize_disparity, CameraPose, DisparityOptions, Render, Scene};

pub use forest::{reference_forest, run_forest, ForestEpisode, ForestRecord, ForestScenario};
pub use gap::{gap_scene, object_mask, reference_gap, run_gap, ApertureShape, GapEpisode, GapRecord, GapScenario};
pub use imo::{reference_imo, run_imo, ImoEpisode, ImoRecord, ImoScenario, TrackingComparison};
pub use log::write_records;

/// How an arm commands its baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BaselineMode {
    Fixed { baseline: f64 },
    Variable { gain: f64 },
}

impl BaselineMode {
    pub fn validate(&self, limits: &BaselineLimits) -> Result<()> {
        match *self {
            BaselineMode::Fixed { baseline } if !limits.contains(baseline) => Err(Error::OutOfRange {
                value: baseline,
                min: limits.min,
                max: limits.max,
            }),
            BaselineMode::Variable { gain } => ensure_positive("baseline gain", gain),
            _ => Ok(()),
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, BaselineMode::Variable { .. })
    }
}

impl fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineMode::Fixed { baseline } => write!(f, "fixed:{baseline}"),
            BaselineMode::Variable { gain } => write!(f, "variable:{gain}"),
        }
    }
}

impl FromStr for BaselineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected fixed:<m> or variable:<K>, got {s:?}")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad number {value:?} in {s:?}")))?;
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Parse(format!("value in {s:?} must be positive")));
        }
        match kind.trim() {
            "fixed" => Ok(BaselineMode::Fixed { baseline: v }),
            "variable" => Ok(BaselineMode::Variable { gain: v }),
            other => Err(Error::Parse(format!("unknown baseline mode {other:?}"))),
        }
    }
}

/// One arm of a comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub name: String,
    pub mode: BaselineMode,
}

impl Arm {
    pub fn new(name: impl Into<String>, mode: BaselineMode) -> Self {
        Self { name: name.into(), mode }
    }
}

/// Fixed at the smallest stroke, fixed at the largest, and variable.
pub fn comparative_arms(limits: &BaselineLimits, gain: f64) -> Vec<Arm> {
    vec![
        Arm::new("fixed_small", BaselineMode::Fixed { baseline: limits.min }),
        Arm::new("fixed_large", BaselineMode::Fixed { baseline: limits.max }),
        Arm::new("variable", BaselineMode::Variable { gain }),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub width: usize,
    pub height: usize,
    pub focal_px: f64,
    /// Smallest disparity kept, px.
    pub min_disparity: f64,
    /// Matcher search range, px.
    pub max_disparity: f64,
    pub quantize: bool,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            focal_px: 100.0,
            min_disparity: 1.0,
            max_disparity: 24.0,
            quantize: true,
        }
    }
}

/// A stereo head whose disparity comes from the true baseline and whose
/// depth is triangulated with the commanded one.
#[derive(Clone, Debug)]
pub struct Sensor {
    pub config: SensorConfig,
    pub camera: CameraModel,
    pub rays: RayGrid,
}

#[derive(Clone, Debug)]
pub struct Observation {
    pub render: Render,
    pub disparity: DisparityImage,
    pub depth: DepthImage,
}

impl Sensor {
    pub fn new(config: SensorConfig) -> Result<Self> {
        ensure_positive("focal length", config.focal_px)?;
        ensure_positive("max disparity", config.max_disparity)?;
        if config.width == 0 || config.height == 0 {
            return Err(Error::invalid("image size must be non-zero"));
        }
        let size = ImageSize::new(config.width, config.height);
        let camera = CameraModel::pinhole(CameraIntrinsics::centered(config.focal_px, size));
        Ok(Self {
            rays: RayGrid::new(&camera, size)?,
            camera,
            config,
        })
    }

    pub fn size(&self) -> ImageSize {
        self.rays.size()
    }

    pub fn focal_px(&self) -> f64 {
        self.config.focal_px
    }

    pub fn observe(&self, scene: &Scene, pose: &CameraPose, time: f64, achieved: f64, believed: f64) -> Result<Observation> {
        let render = render_depth(scene, pose, &self.rays, time);
        let calib = StereoCalibration::ideal(self.camera, achieved);
        let options = DisparityOptions {
            quantize: self.config.quantize,
            min_disparity: Some(self.config.min_disparity),
            max_disparity: Some(self.config.max_disparity),
            ..DisparityOptions::default()
        };
        let disparity = synthesize_disparity(scene, &render, &self.rays, &calib, &options)?;
        let depth = depth_image_from_disparity(&disparity, believed, self.config.focal_px)?;
        Ok(Observation {
            render,
            disparity,
            depth,
        })
    }
}

/// The actuator plus the noise stream an arm draws from.
#[derive(Clone, Debug)]
pub struct RigDriver {
    pub model: ActuatorModel,
    rng: ChaCha8Rng,
}

impl RigDriver {
    pub fn new(model: ActuatorModel, seed: u64) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// One actuator move; every call consumes exactly one noise draw.
    pub fn command(&mut self, target: f64) -> Result<BaselineCommand> {
        command_baseline(&self.model, target, &mut self.rng)
    }
}

/// Scene generation stream, separate from the actuator noise stream.
pub(crate) fn scene_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ReachedGoal,
    Collided,
    Traversed,
    Timeout,
    Completed,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::ReachedGoal => "reached_goal",
            Outcome::Collided => "collided",
            Outcome::Traversed => "traversed",
            Outcome::Timeout => "timeout",
            Outcome::Completed => "completed",
        })
    }
}

/// Horizontal unit vector from `from` to `to`, or `None` if they coincide.
pub(crate) fn horizontal_direction(from: &Vector3<f64>, to: &Vector3<f64>) -> Option<Vector3<f64>> {
    let d = Vector3::new(to.x - from.x, to.y - from.y, 0.0);
    let n = d.norm();
    (n > 1e-12).then(|| d / n)
}
