use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::gap::object_mask;
use super::{Arm, BaselineMode, Outcome, RigDriver, Sensor, SensorConfig};
use crate::control::{object_estimate, DepthFrame, ImoConfig, ImoPolicy, LossReason};
use crate::error::{ensure_positive, Error, Result};
use crate::rig::ActuatorModel;
use crate::sim::{Bounds, Cuboid, ObserverState, Scene, SceneObject, Shape, Trajectory, Wall};

#[derive(Clone, Debug)]
pub struct ImoScenario {
    pub scene: Scene,
    pub start: Vector3<f64>,
    pub heading: Vector3<f64>,
    /// Index of the moving object.
    pub object: usize,
    pub dt: f64,
    pub steps: usize,
    pub sensor: SensorConfig,
    pub config: ImoConfig,
    pub actuator: ActuatorModel,
    pub seed: u64,
}

/// A 0.5 m cube turned 45 degrees whose front edge recedes from 0.8 m to
/// 10 m ahead of a static observer, inside a walled room.
pub fn reference_imo(seed: u64) -> Result<ImoScenario> {
    let bounds = Bounds::new(Vector3::new(-2.0, -4.0, -1.0), Vector3::new(16.0, 4.0, 5.0))?;
    let half = 0.25;
    let front = 0.8;
    let speed = 0.2;
    let duration = (10.0 - front) / speed;
    let start = Vector3::new(front + half * 2f64.sqrt(), 0.0, 1.0);
    let cube = Cuboid::new(start, Vector3::new(half, half, half), std::f64::consts::FRAC_PI_4)?;
    let path = Trajectory::linear(start, Vector3::new(speed, 0.0, 0.0), 0.0, duration)?;
    let wall = |c: Vector3<f64>, n: Vector2<f64>| -> Result<SceneObject> {
        Ok(SceneObject::fixed(Shape::Wall(Wall::new(c, n, f64::INFINITY, f64::INFINITY, vec![])?)))
    };
    let objects = vec![
        SceneObject::moving(Shape::Cuboid(cube), path),
        wall(Vector3::new(0.0, 3.0, 1.0), Vector2::new(0.0, -1.0))?,
        wall(Vector3::new(0.0, -3.0, 1.0), Vector2::new(0.0, 1.0))?,
    ];
    Ok(ImoScenario {
        scene: Scene::new(objects, bounds)?,
        start: Vector3::new(0.0, 0.0, 1.0),
        heading: Vector3::x(),
        object: 0,
        dt: 0.1,
        steps: (duration / 0.1).round() as usize + 10,
        sensor: SensorConfig::default(),
        config: ImoConfig::default(),
        actuator: ActuatorModel::new(0.1, 0.3, ActuatorModel::DEFAULT_NOISE)?,
        seed,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImoRecord {
    pub run_id: String,
    pub arm: String,
    pub step: usize,
    pub time: f64,
    pub baseline_commanded: f64,
    pub baseline_achieved: f64,
    pub tracking: bool,
    pub detected: bool,
    pub loss: Option<String>,
    pub median_depth: Option<f64>,
    pub est_x: Option<f64>,
    pub est_y: Option<f64>,
    pub est_z: Option<f64>,
    /// The same estimator applied to true depth and the true object mask.
    pub truth_x: Option<f64>,
    pub truth_y: Option<f64>,
    pub truth_z: Option<f64>,
    pub truth_depth: Option<f64>,
    pub error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImoEpisode {
    pub arm: Arm,
    pub outcome: Outcome,
    pub detection_window: f64,
    pub records: Vec<ImoRecord>,
}

impl ImoEpisode {
    /// Maximal runs of steps after the detection window without a track, as
    /// `(first, last)` times.
    pub fn lost_segments(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut open: Option<(f64, f64)> = None;
        for r in self.records.iter().filter(|r| r.time >= self.detection_window - 1e-9) {
            if r.tracking {
                out.extend(open.take());
            } else {
                open = Some(open.map_or((r.time, r.time), |(a, _)| (a, r.time)));
            }
        }
        out.extend(open);
        out
    }

    pub fn tracked_steps(&self) -> usize {
        self.records.iter().filter(|r| r.tracking).count()
    }

    /// Smallest and largest true object depth while tracked.
    pub fn tracked_depth_range(&self) -> Option<(f64, f64)> {
        let depths = self.records.iter().filter(|r| r.tracking).filter_map(|r| r.truth_depth);
        depths.fold(None, |acc, z| match acc {
            None => Some((z, z)),
            Some((lo, hi)) => Some((lo.min(z), hi.max(z))),
        })
    }
}

/// Mean trajectory errors of two arms over the steps both were tracking.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackingComparison {
    pub arm: String,
    pub other: String,
    pub steps: usize,
    pub error: f64,
    pub other_error: f64,
}

impl TrackingComparison {
    pub fn between(a: &ImoEpisode, b: &ImoEpisode) -> Result<Self> {
        let (mut n, mut ea, mut eb) = (0usize, 0.0, 0.0);
        for (ra, rb) in a.records.iter().zip(&b.records) {
            if let (Some(x), Some(y)) = (ra.error, rb.error) {
                n += 1;
                ea += x;
                eb += y;
            }
        }
        if n == 0 {
            return Err(Error::InsufficientData {
                valid: 0,
                total: a.records.len().min(b.records.len()),
            });
        }
        Ok(Self {
            arm: a.arm.name.clone(),
            other: b.arm.name.clone(),
            steps: n,
            error: ea / n as f64,
            other_error: eb / n as f64,
        })
    }
}

fn loss_name(r: LossReason) -> &'static str {
    match r {
        LossReason::Vanished => "vanished",
        LossReason::Unobservable => "unobservable",
        LossReason::Inaccurate => "inaccurate",
    }
}

pub fn run_imo(sc: &ImoScenario, arm: &Arm) -> Result<ImoEpisode> {
    ensure_positive("dt", sc.dt)?;
    if sc.object >= sc.scene.objects().len() {
        return Err(Error::invalid("tracked object index out of range"));
    }
    let mut cfg = sc.config;
    arm.mode.validate(&cfg.limits)?;
    let sensor = Sensor::new(sc.sensor)?;
    let f = sensor.focal_px();
    let mut b_cmd = match arm.mode {
        BaselineMode::Fixed { baseline } => baseline,
        BaselineMode::Variable { gain } => {
            cfg.baseline_gain = gain;
            cfg.limits.min
        }
    };
    let mut policy = ImoPolicy::new(cfg, b_cmd)?;
    let observer = ObserverState::new(sc.start, sc.heading)?;
    let pose = observer.camera_pose()?;
    let mut driver = RigDriver::new(sc.actuator, sc.seed)?;
    let mut records = Vec::with_capacity(sc.steps);
    for step in 0..sc.steps {
        let t = step as f64 * sc.dt;
        let act = driver.command(b_cmd)?;
        let obs = sensor.observe(&sc.scene, &pose, t, act.achieved, b_cmd)?;
        let mask: Vec<usize> = object_mask(&obs.render, sc.object)
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect();
        let truth = object_estimate(&mask, &obs.render.depth, &sensor.rays, &pose);
        let frame = DepthFrame {
            depth: obs.depth,
            pose,
            focal_baseline: b_cmd * f,
            time: t,
        };
        let cmd = policy.step(frame, &sensor.camera, &sensor.rays, sc.dt)?;
        let error = match (cmd.position, truth) {
            (Some(p), Some((q, _))) if cmd.tracking => Some((p - q).norm()),
            _ => None,
        };
        records.push(ImoRecord {
            run_id: String::new(),
            arm: arm.name.clone(),
            step,
            time: t,
            baseline_commanded: b_cmd,
            baseline_achieved: act.achieved,
            tracking: cmd.tracking,
            detected: cmd.detected,
            loss: cmd.loss.map(|r| loss_name(r).to_string()),
            median_depth: cmd.median_depth,
            est_x: cmd.position.map(|p| p.x),
            est_y: cmd.position.map(|p| p.y),
            est_z: cmd.position.map(|p| p.z),
            truth_x: truth.map(|t| t.0.x),
            truth_y: truth.map(|t| t.0.y),
            truth_z: truth.map(|t| t.0.z),
            truth_depth: truth.map(|t| t.1),
            error,
        });
        if arm.mode.is_variable() {
            b_cmd = cmd.baseline;
        }
    }
    Ok(ImoEpisode {
        arm: arm.clone(),
        outcome: Outcome::Completed,
        detection_window: cfg.detection_window,
        records,
    })
}
