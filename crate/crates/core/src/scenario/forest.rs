use nalgebra::{Vector2, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{horizontal_direction, scene_rng, Arm, BaselineMode, Outcome, RigDriver, Sensor, SensorConfig};
use crate::control::{ForestConfig, ForestPolicy};
use crate::error::{ensure_positive, Error, Result};
use crate::rig::ActuatorModel;
use crate::sim::{Bounds, Cylinder, ObserverState, Scene, SceneObject, Shape};

#[derive(Clone, Debug)]
pub struct ForestScenario {
    pub scene: Scene,
    pub start: Vector3<f64>,
    pub goal: Vector3<f64>,
    pub goal_radius: f64,
    pub dt: f64,
    pub max_steps: usize,
    /// Stationary steps the variable arm spends settling its baseline.
    pub presettle_steps: usize,
    pub sensor: SensorConfig,
    pub policy: ForestConfig,
    pub actuator: ActuatorModel,
    pub seed: u64,
}

impl ForestScenario {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("dt", self.dt)?;
        ensure_positive("goal radius", self.goal_radius)?;
        self.policy.validate()?;
        self.actuator.validate()?;
        if !self.scene.bounds().contains(&self.start) || !self.scene.bounds().contains(&self.goal) {
            return Err(Error::invalid("start and goal must lie inside the scene bounds"));
        }
        if horizontal_direction(&self.start, &self.goal).is_none() {
            return Err(Error::invalid("goal coincides with start"));
        }
        Ok(())
    }
}

/// Trees scattered between start and goal, plus one thin tree just off the
/// straight path about a metre ahead.
pub fn reference_forest(seed: u64) -> Result<ForestScenario> {
    let bounds = Bounds::new(Vector3::new(-2.0, -6.0, -1.0), Vector3::new(14.0, 6.0, 6.0))?;
    let start = Vector3::new(0.0, 0.0, 1.0);
    let goal = Vector3::new(11.0, 0.0, 1.0);
    let mut trees = vec![Cylinder::new(Vector2::new(1.1, 0.08), 0.0, 4.0, 0.1)?];
    let mut rng = scene_rng(seed);
    let mut attempts = 0;
    while trees.len() < 15 && attempts < 5000 {
        attempts += 1;
        let c = Vector2::new(rng.gen_range(2.5..10.0), rng.gen_range(-3.5..3.5));
        let r = rng.gen_range(0.08..0.15);
        if (c - goal.xy()).norm() < 0.8 || trees.iter().any(|t| (t.center - c).norm() < 1.2) {
            continue;
        }
        trees.push(Cylinder::new(c, 0.0, 4.0, r)?);
    }
    let objects = trees.into_iter().map(|t| SceneObject::fixed(Shape::Cylinder(t))).collect();
    let actuator = ActuatorModel::new(0.1, 0.3, ActuatorModel::DEFAULT_NOISE)?;
    Ok(ForestScenario {
        scene: Scene::new(objects, bounds)?,
        start,
        goal,
        goal_radius: 0.3,
        dt: 0.1,
        max_steps: 600,
        presettle_steps: 40,
        sensor: SensorConfig::default(),
        policy: ForestConfig::default(),
        actuator,
        seed,
    })
}

/// One step of a forest episode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ForestRecord {
    pub run_id: String,
    pub arm: String,
    pub step: usize,
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub heading_x: f64,
    pub heading_y: f64,
    pub vx: f64,
    pub vy: f64,
    pub speed: f64,
    pub baseline_commanded: f64,
    pub baseline_achieved: f64,
    pub baseline_target: f64,
    pub w: f64,
    pub z_close: Option<f64>,
    pub z_filtered: Option<f64>,
    /// True distance from the body centre to the nearest surface.
    pub clearance: f64,
    pub stop: bool,
    pub blocked: bool,
    pub collided: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForestEpisode {
    pub arm: Arm,
    pub outcome: Outcome,
    pub completion_time: Option<f64>,
    pub records: Vec<ForestRecord>,
}

impl ForestEpisode {
    pub fn stops(&self) -> usize {
        self.records.iter().filter(|r| r.stop).count()
    }

    /// Among steps whose sensed `Z_close` is within the stop distance, the
    /// first one not preceded (or accompanied) by a stop command.
    pub fn first_unguarded_step(&self, tau_safe: f64) -> Option<usize> {
        let mut stopped = false;
        for r in &self.records {
            stopped |= r.stop;
            if r.z_close.is_some_and(|z| z <= tau_safe) && !stopped {
                return Some(r.step);
            }
        }
        None
    }
}

fn config_for(sc: &ForestScenario, mode: BaselineMode) -> ForestConfig {
    let mut cfg = sc.policy;
    if let BaselineMode::Variable { gain } = mode {
        cfg.baseline_gain = gain;
    }
    cfg.dt = sc.dt;
    cfg
}

/// Lets the variable arm adjust its baseline to the starting view before it
/// moves; returns the settled policy and baseline.
fn presettle(sc: &ForestScenario, sensor: &Sensor, cfg: ForestConfig, observer: &ObserverState) -> Result<(ForestPolicy, f64)> {
    let mut b = cfg.limits.min;
    let mut policy = ForestPolicy::new(cfg, b)?;
    let pose = observer.camera_pose()?;
    let goal = pose.axes.transpose() * (sc.goal - observer.position);
    let mut filtered = None;
    for _ in 0..sc.presettle_steps {
        let obs = sensor.observe(&sc.scene, &pose, 0.0, b, b)?;
        let cmd = policy.step(&obs.depth, &sensor.camera, &goal, b)?;
        b = cmd.baseline;
        filtered = cmd.z_filtered;
    }
    let mut settled = ForestPolicy::new(cfg, b)?;
    if let Some(z) = filtered {
        settled.settle(b, z);
    }
    Ok((settled, b))
}

pub fn run_forest(sc: &ForestScenario, arm: &Arm) -> Result<ForestEpisode> {
    sc.validate()?;
    let cfg = config_for(sc, arm.mode);
    arm.mode.validate(&cfg.limits)?;
    let sensor = Sensor::new(sc.sensor)?;
    let heading = horizontal_direction(&sc.start, &sc.goal).expect("validated");
    let mut observer = ObserverState::new(sc.start, heading)?;
    let (mut policy, mut b_cmd) = match arm.mode {
        BaselineMode::Fixed { baseline } => (ForestPolicy::new(cfg, baseline)?, baseline),
        BaselineMode::Variable { .. } => presettle(sc, &sensor, cfg, &observer)?,
    };
    let mut driver = RigDriver::new(sc.actuator, sc.seed)?;
    let mut records = Vec::new();
    let mut outcome = Outcome::Timeout;
    let mut completion_time = None;
    for step in 0..sc.max_steps {
        let t = step as f64 * sc.dt;
        let act = driver.command(b_cmd)?;
        let pose = observer.camera_pose()?;
        let obs = sensor.observe(&sc.scene, &pose, t, act.achieved, b_cmd)?;
        let to_cam = pose.axes.transpose();
        let goal = to_cam * (sc.goal - observer.position);
        let cmd = policy.step(&obs.depth, &sensor.camera, &goal, b_cmd)?;

        let mut v = pose.axes * cmd.velocity;
        v.z = 0.0;
        let n = v.norm();
        if n > cfg.max_speed {
            v *= cfg.max_speed / n;
        }
        let from = observer.position;
        let to = from + v * sc.dt;
        let radius = cfg.body_radius(act.achieved);
        let clearance = (1..=4)
            .map(|k| {
                let s = k as f64 / 4.0;
                sc.scene.distance(&(from + (to - from) * s), t + s * sc.dt)
            })
            .fold(f64::INFINITY, f64::min);
        let collided = clearance < radius || !sc.scene.bounds().contains(&to);
        observer.position = to;
        observer.velocity = v;
        observer.time = t + sc.dt;
        if let Some(h) = horizontal_direction(&to, &sc.goal) {
            observer.heading = h;
        }
        records.push(ForestRecord {
            run_id: String::new(),
            arm: arm.name.clone(),
            step,
            time: observer.time,
            x: to.x,
            y: to.y,
            z: to.z,
            heading_x: observer.heading.x,
            heading_y: observer.heading.y,
            vx: v.x,
            vy: v.y,
            speed: v.norm(),
            baseline_commanded: b_cmd,
            baseline_achieved: act.achieved,
            baseline_target: cmd.baseline_target,
            w: cmd.w,
            z_close: cmd.z_close,
            z_filtered: cmd.z_filtered,
            clearance,
            stop: cmd.stop,
            blocked: cmd.blocked,
            collided,
        });
        if collided {
            outcome = Outcome::Collided;
            break;
        }
        if (to.xy() - sc.goal.xy()).norm() < sc.goal_radius {
            outcome = Outcome::ReachedGoal;
            completion_time = Some(observer.time);
            break;
        }
        if arm.mode.is_variable() {
            b_cmd = cmd.baseline;
        }
    }
    Ok(ForestEpisode {
        arm: arm.clone(),
        outcome,
        completion_time,
        records,
    })
}
