use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::baseline::{baseline_law, BaselineLimits, LowPass, SlewLimiter, DEFAULT_BASELINE_GAIN, DEFAULT_SLEW_RATE};
use super::blend::{blend_direction, WeightMapping};
use super::free_space::{free_space_direction, goal_pixel, FreeSpace, Neighborhood};
use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{CameraModel, DepthImage};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub weight: WeightMapping,
    pub baseline_gain: f64,
    pub limits: BaselineLimits,
    pub slew_rate: f64,
    pub cutoff_hz: f64,
    pub dt: f64,
    /// Stop distance `tau_safe`, m.
    pub tau_safe: f64,
    /// Depth beyond which a pixel counts as free, m.
    pub clearance: f64,
    /// Neighbourhood scale over the projected body.
    pub margin: f64,
    pub min_half_size: usize,
    /// Reaction time in the speed law, s.
    pub reaction_time: f64,
    pub min_speed: f64,
    pub max_speed: f64,
    /// Reliable range as a fraction of `b f`.
    pub reliable_fraction: f64,
    /// Largest measurable disparity, px.
    pub max_disparity: f64,
    pub min_body_radius: f64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            weight: WeightMapping::default(),
            baseline_gain: DEFAULT_BASELINE_GAIN,
            limits: BaselineLimits::default(),
            slew_rate: DEFAULT_SLEW_RATE,
            cutoff_hz: 2.0,
            dt: 0.1,
            tau_safe: 0.5,
            clearance: 1.5,
            margin: 1.5,
            min_half_size: 3,
            reaction_time: 1.0,
            min_speed: 0.1,
            max_speed: 1.0,
            reliable_fraction: 0.1,
            max_disparity: 24.0,
            min_body_radius: 0.12,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("baseline gain", self.baseline_gain),
            ("tau_safe", self.tau_safe),
            ("clearance", self.clearance),
            ("margin", self.margin),
            ("reaction time", self.reaction_time),
            ("min speed", self.min_speed),
            ("reliable fraction", self.reliable_fraction),
            ("max disparity", self.max_disparity),
            ("body radius", self.min_body_radius),
        ] {
            ensure_positive(name, v)?;
        }
        if self.max_speed < self.min_speed {
            return Err(Error::invalid("max speed must be >= min speed"));
        }
        Ok(())
    }

    /// Body radius for a rig of baseline `b`.
    pub fn body_radius(&self, baseline: f64) -> f64 {
        self.min_body_radius.max(baseline / 2.0 + 0.02)
    }

    /// Nearest measurable depth `b f / D_max`.
    pub fn min_range(&self, baseline: f64, focal_px: f64) -> f64 {
        baseline * focal_px / self.max_disparity
    }

    /// Depth up to which the relative depth error stays small.
    pub fn reliable_range(&self, baseline: f64, focal_px: f64) -> f64 {
        self.reliable_fraction * baseline * focal_px
    }

    /// Speed that lets the rig react before the nearest sensed depth reaches
    /// the larger of the stop distance and the blind range.
    pub fn speed(&self, z_close: Option<f64>, baseline: f64, focal_px: f64) -> f64 {
        let reach = self.reliable_range(baseline, focal_px);
        let seen = z_close.map_or(reach, |z| z.min(reach));
        let floor = self.tau_safe.max(self.min_range(baseline, focal_px));
        ((seen - floor) / self.reaction_time).clamp(self.min_speed, self.max_speed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForestCommand {
    /// Camera-frame velocity command, m/s.
    pub velocity: Vector3<f64>,
    /// Blended unit direction in the camera frame.
    pub heading: Vector3<f64>,
    pub speed: f64,
    pub baseline: f64,
    pub baseline_target: f64,
    pub w: f64,
    pub z_close: Option<f64>,
    pub z_filtered: Option<f64>,
    pub neighborhood: Neighborhood,
    pub stop: bool,
    pub blocked: bool,
}

/// Steering by blending goal and free-space directions, a speed bounded by
/// what the current baseline can see, and `b = K Z_close` on the filtered
/// closest depth.
#[derive(Clone, Debug)]
pub struct ForestPolicy {
    config: ForestConfig,
    filter: LowPass,
    slew: SlewLimiter,
    stopped: bool,
}

impl ForestPolicy {
    pub fn new(config: ForestConfig, initial_baseline: f64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            filter: LowPass::new(config.cutoff_hz, config.dt)?,
            slew: SlewLimiter::new(config.slew_rate, config.limits.clamp(initial_baseline))?,
            config,
            stopped: false,
        })
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn baseline(&self) -> f64 {
        self.slew.current()
    }

    /// Sets the commanded baseline and the filtered depth that produces it.
    pub fn settle(&mut self, baseline: f64, z_filtered: f64) {
        self.slew.reset_to(self.config.limits.clamp(baseline));
        self.filter.reset_to(z_filtered);
    }

    /// `goal` is camera-frame; `baseline` is the rig's current baseline.
    pub fn step(
        &mut self,
        depth: &DepthImage,
        camera: &CameraModel,
        goal: &Vector3<f64>,
        baseline: f64,
    ) -> Result<ForestCommand> {
        let cfg = self.config;
        let f = camera.intrinsics.fx;
        let size = depth.size();
        let v_goal = goal.normalize();
        let target_px = goal_pixel(camera, &v_goal);
        let scale = cfg.margin * cfg.body_radius(baseline) * f;
        let z_corridor = corridor_depth(depth, target_px, scale);
        let z_size = z_corridor.unwrap_or(cfg.reliable_range(baseline, f));
        let half = ((scale / z_size).ceil() as usize).max(cfg.min_half_size);
        let nbhd = Neighborhood::around(target_px, half, size);
        let free = free_space_direction(depth, camera, target_px, &nbhd, cfg.clearance)?;
        let z_close = free.z_close();
        let w = cfg.weight.weight(z_close)?;
        let blocked = matches!(free, FreeSpace::Blocked { .. });
        let heading = match free.direction() {
            Some(v_free) => blend_direction(&v_goal, &v_free, w).unwrap_or(v_free),
            None => v_goal,
        };

        let z_filtered = z_close.map(|z| self.filter.update(z)).or(self.filter.value());
        let baseline_target = match z_filtered {
            Some(z) => baseline_law(z, cfg.baseline_gain, &cfg.limits)?,
            None => self.slew.current(),
        };
        let commanded = self.slew.step(baseline_target, cfg.dt);

        let danger = blocked || z_close.is_some_and(|z| z <= cfg.tau_safe);
        let stop = danger && !self.stopped;
        self.stopped = danger;
        let (speed, command) = if stop {
            (0.0, Vector3::zeros())
        } else if danger {
            let side = free
                .direction()
                .map(|d| Vector3::new(d.x, d.y, 0.0))
                .filter(|d| d.norm() > 1e-9)
                .map(|d| d.normalize());
            match side {
                Some(d) => (cfg.min_speed, d * cfg.min_speed),
                None => (0.0, Vector3::zeros()),
            }
        } else {
            let speed = cfg.speed(z_close, baseline, f);
            (speed, heading * speed)
        };
        Ok(ForestCommand {
            velocity: command,
            heading,
            speed,
            baseline: commanded,
            baseline_target,
            w,
            z_close,
            z_filtered,
            neighborhood: nbhd,
            stop,
            blocked,
        })
    }
}

/// Nearest depth among pixels that fall inside the body square projected at
/// their own depth, `|p - goal| <= scale / z` in both axes.
fn corridor_depth(depth: &DepthImage, goal: nalgebra::Vector2<f64>, scale: f64) -> Option<f64> {
    depth
        .iter_valid()
        .filter(|&(x, y, z)| {
            let half = scale / z;
            (x as f64 - goal.x).abs() <= half && (y as f64 - goal.y).abs() <= half
        })
        .map(|(_, _, z)| z)
        .fold(None, |m: Option<f64>, z| Some(m.map_or(z, |m| m.min(z))))
}
