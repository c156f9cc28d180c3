use nalgebra::{Vector2, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{scene_rng, Arm, BaselineMode, Outcome, RigDriver, Sensor, SensorConfig};
use crate::control::{Cluster, GapPolicy, GapPolicyConfig, GapTarget};
use crate::error::{ensure_positive, Result};
use crate::rig::ActuatorModel;
use crate::sim::{Bounds, ObserverState, Polygon, Render, Scene, SceneObject, Shape, Wall};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApertureShape {
    Rectangle,
    Triangle,
    Hexagon,
}

impl ApertureShape {
    pub const ALL: [ApertureShape; 3] = [ApertureShape::Rectangle, ApertureShape::Triangle, ApertureShape::Hexagon];

    /// Polygon of circumradius-like size `r` around `c` in wall coordinates.
    pub fn polygon(self, c: Vector2<f64>, r: f64) -> Result<Polygon> {
        let regular = |n: usize, phase: f64| {
            (0..n)
                .map(|k| {
                    let a = phase + k as f64 * std::f64::consts::TAU / n as f64;
                    c + Vector2::new(a.cos(), a.sin()) * r
                })
                .collect::<Vec<_>>()
        };
        match self {
            ApertureShape::Rectangle => Polygon::rectangle(c, r, 0.8 * r),
            ApertureShape::Triangle => Polygon::new(regular(3, std::f64::consts::FRAC_PI_2)),
            ApertureShape::Hexagon => Polygon::new(regular(6, 0.0)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GapScenario {
    pub scene: Scene,
    pub start: Vector3<f64>,
    pub heading: Vector3<f64>,
    /// Index of the object seen through the aperture.
    pub background_object: usize,
    /// Distance from the start to the apertured wall along the heading.
    pub wall_distance: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub sensor: SensorConfig,
    pub policy: GapPolicyConfig,
    pub actuator: ActuatorModel,
    pub initial_baseline: f64,
    pub seed: u64,
}

/// Apertured wall `wall_distance` ahead of the start with a far wall behind.
pub fn gap_scene(shape: ApertureShape, center: Vector2<f64>, size: f64, wall_distance: f64) -> Result<(Scene, usize)> {
    let bounds = Bounds::new(Vector3::new(-2.0, -6.0, -2.0), Vector3::new(12.0, 6.0, 5.0))?;
    let front = Wall::new(
        Vector3::new(wall_distance, 0.0, 1.0),
        Vector2::new(-1.0, 0.0),
        4.0,
        2.5,
        vec![shape.polygon(center, size)?],
    )?;
    let back = Wall::new(
        Vector3::new(wall_distance + 5.0, 0.0, 1.0),
        Vector2::new(-1.0, 0.0),
        f64::INFINITY,
        f64::INFINITY,
        vec![],
    )?;
    let scene = Scene::new(
        vec![SceneObject::fixed(Shape::Wall(front)), SceneObject::fixed(Shape::Wall(back))],
        bounds,
    )?;
    Ok((scene, 1))
}

/// A 3 m approach to an aperture whose offset and size come from `seed`.
pub fn reference_gap(shape: ApertureShape, seed: u64) -> Result<GapScenario> {
    let mut rng = scene_rng(seed);
    let center = Vector2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.2..0.2));
    let size = rng.gen_range(0.3..0.4);
    let (scene, background_object) = gap_scene(shape, center, size, 3.0)?;
    Ok(GapScenario {
        scene,
        start: Vector3::new(0.0, 0.0, 1.0),
        heading: Vector3::x(),
        background_object,
        wall_distance: 3.0,
        dt: 0.1,
        max_steps: 200,
        sensor: SensorConfig::default(),
        policy: GapPolicyConfig {
            target: GapTarget::Aperture,
            ..GapPolicyConfig::default()
        },
        actuator: ActuatorModel::new(0.1, 0.3, ActuatorModel::DEFAULT_NOISE)?,
        initial_baseline: 0.3,
        seed,
    })
}

/// Pixels of `render` that see `object`, the ground-truth aperture mask.
pub fn object_mask(render: &Render, object: usize) -> Vec<bool> {
    render.object.iter().map(|o| *o == Some(object)).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub run_id: String,
    pub arm: String,
    pub step: usize,
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub baseline_commanded: f64,
    pub baseline_achieved: f64,
    pub z_ref: Option<f64>,
    pub rim_depth: Option<f64>,
    pub safest_x: Option<f64>,
    pub safest_y: Option<f64>,
    pub safest_cluster: Option<String>,
    pub foreground_pixels: usize,
    pub background_pixels: usize,
    pub detected: bool,
    pub redetected: bool,
    pub collided: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapEpisode {
    pub arm: Arm,
    pub outcome: Outcome,
    pub records: Vec<GapRecord>,
}

impl GapEpisode {
    /// Commanded baselines of the steps before the wall is reached.
    pub fn approach_baselines(&self, wall_x: f64) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.x < wall_x)
            .map(|r| r.baseline_commanded)
            .collect()
    }
}

pub fn run_gap(sc: &GapScenario, arm: &Arm) -> Result<GapEpisode> {
    ensure_positive("dt", sc.dt)?;
    arm.mode.validate(&sc.policy.limits)?;
    let sensor = Sensor::new(sc.sensor)?;
    let mut cfg = sc.policy;
    cfg.dt = sc.dt;
    let mut b_cmd = match arm.mode {
        BaselineMode::Fixed { baseline } => baseline,
        BaselineMode::Variable { gain } => {
            cfg.baseline_gain = gain;
            cfg.limits.clamp(sc.initial_baseline)
        }
    };
    let mut policy = GapPolicy::new(cfg, b_cmd)?;
    let mut observer = ObserverState::new(sc.start, sc.heading)?;
    let wall_x = sc.start.dot(&observer.heading) + sc.wall_distance;
    let mut driver = RigDriver::new(sc.actuator, sc.seed)?;
    let mut records = Vec::new();
    let mut outcome = Outcome::Timeout;
    for step in 0..sc.max_steps {
        let t = step as f64 * sc.dt;
        let act = driver.command(b_cmd)?;
        let pose = observer.camera_pose()?;
        let obs = sensor.observe(&sc.scene, &pose, t, act.achieved, b_cmd)?;
        let cmd = policy.step(&obs.depth, &sensor.camera)?;
        let v = pose.axes * cmd.velocity;
        let from = observer.position;
        let to = from + v * sc.dt;
        let radius = (act.achieved / 2.0 + 0.02).max(0.12);
        let collided = (1..=4).any(|k| {
            let s = k as f64 / 4.0;
            sc.scene.distance(&(from + (to - from) * s), t + s * sc.dt) < radius
        }) || !sc.scene.bounds().contains(&to);
        observer.position = to;
        observer.velocity = v;
        observer.time = t + sc.dt;
        let state = policy.state();
        records.push(GapRecord {
            run_id: String::new(),
            arm: arm.name.clone(),
            step,
            time: observer.time,
            x: to.x,
            y: to.y,
            z: to.z,
            vx: v.x,
            vy: v.y,
            vz: v.z,
            baseline_commanded: b_cmd,
            baseline_achieved: act.achieved,
            z_ref: cmd.z_ref,
            rim_depth: state.and_then(|s| s.rim_depth()),
            safest_x: state.map(|s| s.safest_point.x),
            safest_y: state.map(|s| s.safest_point.y),
            safest_cluster: state.map(|s| {
                match s.safest_cluster {
                    Cluster::Foreground => "foreground",
                    Cluster::Background => "background",
                }
                .to_string()
            }),
            foreground_pixels: state.map_or(0, |s| s.foreground.len()),
            background_pixels: state.map_or(0, |s| s.background.len()),
            detected: cmd.detected,
            redetected: cmd.redetected,
            collided,
        });
        if collided {
            outcome = Outcome::Collided;
            break;
        }
        if to.dot(&observer.heading) > wall_x + 0.5 {
            outcome = Outcome::Traversed;
            break;
        }
        if arm.mode.is_variable() {
            b_cmd = cmd.baseline;
        }
    }
    Ok(GapEpisode {
        arm: arm.clone(),
        outcome,
        records,
    })
}
