use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Rotation3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use vbstereo::control::{BaselineLimits, GapTarget};
use vbstereo::error_analysis::{
    parameter_sweep, sync_sweep, table1_report, write_sync_csv, write_table1_csv, Parameter, Table1Setup,
};
use vbstereo::geometry::{CameraIntrinsics, CameraModel, ImageSize};
use vbstereo::rig::{
    equally_spaced, fit_line, load_rig_file, sweep_actuator, ActuatorModel, CalibrationTable, RigFile,
    SyntheticTableConfig,
};
use vbstereo::scenario::{
    comparative_arms, reference_forest, reference_gap, reference_imo, run_forest, run_gap, run_imo, write_records,
    Arm, ImoEpisode, TrackingComparison,
};
use vbstereo::sim::load_scene_file;

use crate::args::{AnalyzeArgs, CalibArgs, Common, GapArgs, SimArgs, SyncArgs, Target};
use crate::meta::{tag_csv, RunMeta};
use crate::Failure;

struct Output {
    dir: PathBuf,
    meta: RunMeta,
}

impl Output {
    fn new(common: &Common, meta: RunMeta) -> Result<Self, Failure> {
        fs::create_dir_all(&common.out).map_err(|e| Failure::internal(format!("{}: {e}", common.out.display())))?;
        Ok(Self {
            dir: common.out.clone(),
            meta,
        })
    }

    fn id(&self) -> String {
        self.meta.run_id.clone()
    }

    fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
        self.meta.outputs.push(name.to_string());
        Ok(())
    }

    fn records<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let mut buf = Vec::new();
        write_records(&mut buf, rows).map_err(Failure::internal)?;
        self.bytes(name, &buf)
    }

    fn tagged(&mut self, name: &str, csv: &[u8]) -> Result<(), Failure> {
        let tagged = tag_csv(csv, &self.meta.run_id);
        self.bytes(name, &tagged)
    }

    fn finish(self) -> Result<(), Failure> {
        self.meta.write(&self.dir)?;
        println!("run {} -> {}", self.meta.run_id, self.dir.display());
        Ok(())
    }
}

fn digest(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn digest_of(path: &Option<PathBuf>) -> Result<Value, Failure> {
    path.as_deref().map_or(Ok(Value::Null), |p| digest(p).map(Value::String))
}

fn inputs(common: &Common, scene: Option<&PathBuf>) -> Value {
    let show = |p: Option<&PathBuf>| p.map(|p| p.display().to_string());
    json!({ "rig": show(common.rig.as_ref()), "scene": show(scene) })
}

fn load_rig(common: &Common) -> Result<Option<RigFile>, Failure> {
    common
        .rig
        .as_ref()
        .map(|p| load_rig_file(p).map_err(|e| Failure::config(format!("{}: {e}", p.display()))))
        .transpose()
}

fn stroke(rig: &Option<RigFile>) -> Result<(ActuatorModel, BaselineLimits), Failure> {
    let model = match rig.as_ref().and_then(|r| r.actuator) {
        Some(m) => m,
        None => ActuatorModel::new(0.1, 0.3, ActuatorModel::DEFAULT_NOISE).map_err(Failure::internal)?,
    };
    let limits = BaselineLimits::new(model.min, model.max).map_err(Failure::config)?;
    Ok((model, limits))
}

fn period(rate: f64) -> Result<f64, Failure> {
    if rate.is_finite() && rate > 0.0 {
        Ok(1.0 / rate)
    } else {
        Err(Failure::config(format!("rate {rate} must be a positive number of Hz")))
    }
}

fn arms(sim: &SimArgs, limits: &BaselineLimits) -> Result<Vec<Arm>, Failure> {
    match sim.baseline {
        Some(mode) => {
            mode.validate(limits).map_err(Failure::config)?;
            Ok(vec![Arm::new(mode.to_string(), mode)])
        }
        None if sim.gain.is_finite() && sim.gain > 0.0 => Ok(comparative_arms(limits, sim.gain)),
        None => Err(Failure::config(format!("gain {} must be positive", sim.gain))),
    }
}

fn run_arms<E: Send>(
    arms: &[Arm],
    parallel: bool,
    run: impl Fn(&Arm) -> vbstereo::Result<E> + Sync,
) -> Result<Vec<E>, Failure> {
    let run = &run;
    let results: Vec<vbstereo::Result<E>> = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = arms.iter().map(|a| s.spawn(move || run(a))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("episode thread panicked"))
                .collect()
        })
    } else {
        arms.iter().map(run).collect()
    };
    results.into_iter().collect::<Result<Vec<_>, _>>().map_err(Failure::internal)
}

fn sim_config(sim: &SimArgs, arms: &[Arm], steps: usize, dt: f64, actuator: &ActuatorModel) -> Result<Value, Failure> {
    Ok(json!({
        "seed": sim.common.seed,
        "rate_hz": sim.rate,
        "dt": dt,
        "steps": steps,
        "arms": arms,
        "actuator": actuator,
        "scene_sha256": digest_of(&sim.scene)?,
        "rig_sha256": digest_of(&sim.common.rig)?,
    }))
}

fn shared_decisions() -> Value {
    json!({
        "disparity": "rendered with the achieved baseline, rounded to whole pixels",
        "depth": "triangulated with the commanded baseline",
        "noise": "one actuator stream per arm, seeded identically",
        "median": "coordinate-wise",
    })
}

fn with(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

#[derive(Serialize)]
struct SweepOut {
    run_id: String,
    parameter: &'static str,
    focal_length_mm: f64,
    magnitude: f64,
    e_x_max: f64,
    e_y_max: f64,
    e_x_mean: f64,
    e_y_mean: f64,
}

pub fn analyze_errors(a: &AnalyzeArgs) -> Result<(), Failure> {
    let mut setup = Table1Setup::default();
    if let Some(f) = &a.focal {
        setup.focal_lengths_mm = f.clone();
    }
    if let Some(rig) = load_rig(&a.common)? {
        let entry = rig.table.entries()[0];
        setup.alpha = entry.left.intrinsics.alpha;
        setup.distortion = entry.left.distortion;
        setup.translation = entry.extrinsics.translation;
    }
    if a.steps < 2 {
        return Err(Failure::config("sweeps need at least 2 steps"));
    }
    let report = table1_report(&setup).map_err(Failure::config)?;
    let config = json!({ "setup": setup, "steps": a.steps, "rig_sha256": digest_of(&a.common.rig)? });
    let decisions = json!({
        "ratio": "max e_y over max e_x on the integer pixel grid",
        "rotation_convention": report.rotation_convention,
    });
    let mut meta = RunMeta::new("analyze-errors", config, decisions);
    meta.inputs = inputs(&a.common, None);
    let mut out = Output::new(&a.common, meta)?;

    let mut buf = Vec::new();
    write_table1_csv(&mut buf, &report).map_err(Failure::internal)?;
    out.tagged("table1.csv", &buf)?;

    let mut rows = Vec::new();
    for p in Parameter::INTRINSIC.into_iter().chain(Parameter::EXTRINSIC) {
        let top = if p.is_rotation() { setup.rotation_magnitude } else { setup.scalar_magnitude };
        let mags = equally_spaced(0.0, 2.0 * top, a.steps);
        for &f in &setup.focal_lengths_mm {
            for r in parameter_sweep(&setup, p, f, &mags).map_err(Failure::internal)? {
                rows.push(SweepOut {
                    run_id: out.id(),
                    parameter: p.name(),
                    focal_length_mm: f,
                    magnitude: r.magnitude,
                    e_x_max: r.e_x_max,
                    e_y_max: r.e_y_max,
                    e_x_mean: r.e_x_mean,
                    e_y_mean: r.e_y_mean,
                });
            }
        }
    }
    out.records("sweep.csv", &rows)?;
    let failures = report.failures().count();
    println!("table1: {} checks, {failures} outside their band", report.checks.len());
    for c in report.failures() {
        println!("  {} at {} mm: {} ({})", c.parameter.name(), c.focal_length_mm, c.value, c.expectation.label());
    }
    out.finish()
}

pub fn sync_limits(a: &SyncArgs) -> Result<(), Failure> {
    let rig = load_rig(&a.common)?;
    let (_, limits) = stroke(&rig)?;
    if a.steps < 2 {
        return Err(Failure::config("sweeps need at least 2 steps"));
    }
    let baselines = equally_spaced(limits.min, limits.max, a.steps);
    let offsets = equally_spaced(0.001, 0.02, a.steps);
    let rows = sync_sweep(a.k, a.depth, a.focal, &baselines, &offsets).map_err(Failure::config)?;
    let config = json!({
        "k": a.k,
        "depth": a.depth,
        "focal_px": a.focal,
        "baselines": baselines,
        "delta_t": offsets,
        "rig_sha256": digest_of(&a.common.rig)?,
    });
    let decisions = json!({ "bound": "v = k Z^2 / (dt (b f - k Z)); pairs with b f <= k Z are omitted" });
    let mut meta = RunMeta::new("sync-limits", config, decisions);
    meta.inputs = inputs(&a.common, None);
    let mut out = Output::new(&a.common, meta)?;
    let mut buf = Vec::new();
    write_sync_csv(&mut buf, &rows).map_err(Failure::internal)?;
    out.tagged("sync.csv", &buf)?;
    println!("sync: {} of {} pairs bounded", rows.len(), baselines.len() * offsets.len());
    out.finish()
}

#[derive(Serialize)]
struct SampleOut {
    run_id: String,
    target: f64,
    achieved: f64,
}

#[derive(Serialize)]
struct FitOut {
    run_id: String,
    samples: usize,
    slope: f64,
    intercept: f64,
    max_residual: f64,
    max_error: f64,
}

#[derive(Serialize)]
struct PoseOut {
    run_id: String,
    baseline: f64,
    tx: f64,
    ty: f64,
    tz: f64,
    roll_deg: f64,
    pitch_deg: f64,
    yaw_deg: f64,
}

pub fn calib(a: &CalibArgs) -> Result<(), Failure> {
    let rig = load_rig(&a.common)?;
    let (model, _) = stroke(&rig)?;
    if a.positions < 2 || a.steps < 2 {
        return Err(Failure::config("calibration needs at least 2 positions and 2 steps"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let samples = sweep_actuator(&model, a.positions, &mut rng).map_err(Failure::config)?;
    let fit = fit_line(&samples).map_err(Failure::internal)?;
    let table = match rig {
        Some(r) => r.table,
        None => {
            let size = ImageSize::new(128, 128);
            let camera = CameraModel::pinhole(CameraIntrinsics::centered(100.0, size));
            CalibrationTable::synthetic(&SyntheticTableConfig::standard(camera, 0.2), &mut rng)
                .map_err(Failure::internal)?
        }
    };
    let config = json!({
        "seed": a.common.seed,
        "positions": a.positions,
        "steps": a.steps,
        "actuator": model,
        "rig_sha256": digest_of(&a.common.rig)?,
    });
    let decisions = json!({
        "noise": "achieved = clamp(target) (1 + eta), eta uniform in [-noise, noise]",
        "interpolation": "screw linear interpolation between neighbouring calibrated poses",
        "table": if a.common.rig.is_some() { "rig file" } else { "synthetic, 10 poses, 0.2 degree rotation jitter" },
    });
    let mut meta = RunMeta::new("calib", config, decisions);
    meta.inputs = inputs(&a.common, None);
    let mut out = Output::new(&a.common, meta)?;
    let id = out.id();
    let rows: Vec<SampleOut> = samples
        .iter()
        .map(|s| SampleOut {
            run_id: id.clone(),
            target: s.target,
            achieved: s.achieved,
        })
        .collect();
    out.records("calib_samples.csv", &rows)?;
    out.records(
        "calib_fit.csv",
        &[FitOut {
            run_id: id.clone(),
            samples: samples.len(),
            slope: fit.slope,
            intercept: fit.intercept,
            max_residual: fit.max_residual,
            max_error: fit.max_error,
        }],
    )?;
    let (lo, hi) = table.range();
    let mut poses = Vec::new();
    for b in equally_spaced(lo, hi, a.steps) {
        let ext = table.interpolate(b).map_err(Failure::internal)?.extrinsics;
        let (r, p, y) = Rotation3::from_matrix_unchecked(ext.rotation).euler_angles();
        poses.push(PoseOut {
            run_id: id.clone(),
            baseline: b,
            tx: ext.translation.x,
            ty: ext.translation.y,
            tz: ext.translation.z,
            roll_deg: r.to_degrees(),
            pitch_deg: p.to_degrees(),
            yaw_deg: y.to_degrees(),
        });
    }
    out.records("calib_poses.csv", &poses)?;
    println!(
        "calib: slope {:.5}, max residual {:.3} mm over {} samples",
        fit.slope,
        fit.max_residual * 1000.0,
        samples.len()
    );
    out.finish()
}

#[derive(Serialize)]
struct ForestSummary {
    run_id: String,
    arm: String,
    mode: String,
    outcome: String,
    completion_time: Option<f64>,
    steps: usize,
    stops: usize,
    min_clearance: f64,
    mean_baseline: f64,
}

pub fn sim_forest(a: &SimArgs) -> Result<(), Failure> {
    let rig = load_rig(&a.common)?;
    let (actuator, limits) = stroke(&rig)?;
    let dt = period(a.rate)?;
    let mut sc = reference_forest(a.common.seed).map_err(Failure::internal)?;
    if let Some(p) = &a.scene {
        sc.scene = load_scene_file(p).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?;
    }
    sc.dt = dt;
    sc.max_steps = a.steps.unwrap_or(sc.max_steps);
    sc.actuator = actuator;
    sc.policy.limits = limits;
    sc.validate().map_err(Failure::config)?;
    let arms = arms(a, &limits)?;
    let config = with(
        sim_config(a, &arms, sc.max_steps, dt, &actuator)?,
        json!({ "start": sc.start, "goal": sc.goal, "policy": sc.policy, "sensor": sc.sensor }),
    );
    let decisions = with(
        shared_decisions(),
        json!({
            "blend_weight": sc.policy.weight,
            "z_close": "minimum depth inside the corridor swept toward the goal",
            "heading": "yaws toward the goal every step",
            "stop": "zero command on the first danger step, then sidestep at the minimum speed",
        }),
    );
    let mut meta = RunMeta::new("sim-forest", config, decisions);
    meta.inputs = inputs(&a.common, a.scene.as_ref());
    let mut out = Output::new(&a.common, meta)?;
    let episodes = run_arms(&arms, a.parallel, |arm| run_forest(&sc, arm))?;
    let id = out.id();
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for e in &episodes {
        let n = e.records.len().max(1) as f64;
        summary.push(ForestSummary {
            run_id: id.clone(),
            arm: e.arm.name.clone(),
            mode: e.arm.mode.to_string(),
            outcome: e.outcome.to_string(),
            completion_time: e.completion_time,
            steps: e.records.len(),
            stops: e.stops(),
            min_clearance: e.records.iter().map(|r| r.clearance).fold(f64::INFINITY, f64::min),
            mean_baseline: e.records.iter().map(|r| r.baseline_commanded).sum::<f64>() / n,
        });
        records.extend(e.records.iter().cloned().map(|mut r| {
            r.run_id = id.clone();
            r
        }));
    }
    out.records("episodes.csv", &records)?;
    out.records("summary.csv", &summary)?;
    for s in &summary {
        let time = s.completion_time.map_or("-".to_string(), |t| format!("{t:.1} s"));
        println!("{:<12} {:<13} {time}", s.arm, s.outcome);
    }
    out.finish()
}

#[derive(Serialize)]
struct GapSummary {
    run_id: String,
    arm: String,
    mode: String,
    outcome: String,
    steps: usize,
    initial_baseline: f64,
    final_baseline: f64,
    non_increasing: bool,
    redetections: usize,
}

pub fn sim_gap(a: &GapArgs) -> Result<(), Failure> {
    let sim = &a.sim;
    let rig = load_rig(&sim.common)?;
    let (actuator, limits) = stroke(&rig)?;
    let dt = period(sim.rate)?;
    let mut sc = reference_gap(a.aperture.into(), sim.common.seed).map_err(Failure::internal)?;
    if let Some(p) = &sim.scene {
        sc.scene = load_scene_file(p).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?;
        if sc.background_object >= sc.scene.objects().len() {
            return Err(Failure::config("gap scenes need the far surface as object 1"));
        }
    }
    sc.dt = dt;
    sc.max_steps = sim.steps.unwrap_or(sc.max_steps);
    sc.actuator = actuator;
    sc.policy.limits = limits;
    sc.policy.target = match a.target {
        Target::SafestPoint => GapTarget::SafestPoint,
        Target::Aperture => GapTarget::Aperture,
    };
    sc.initial_baseline = limits.clamp(sc.initial_baseline);
    let arms = arms(sim, &limits)?;
    let config = with(
        sim_config(sim, &arms, sc.max_steps, dt, &actuator)?,
        json!({
            "aperture": format!("{:?}", a.aperture).to_lowercase(),
            "wall_distance": sc.wall_distance,
            "initial_baseline": sc.initial_baseline,
            "policy": sc.policy,
        }),
    );
    let decisions = with(
        shared_decisions(),
        json!({
            "target": sc.policy.target,
            "clusters": "2-means on depth, no gap below 3 pooled standard deviations",
            "z_ref": "ratcheted minimum of the rim depth; baseline never increases",
        }),
    );
    let mut meta = RunMeta::new("sim-gap", config, decisions);
    meta.inputs = inputs(&sim.common, sim.scene.as_ref());
    let mut out = Output::new(&sim.common, meta)?;
    let episodes = run_arms(&arms, sim.parallel, |arm| run_gap(&sc, arm))?;
    let id = out.id();
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for e in &episodes {
        let approach = e.approach_baselines(sc.start.x + sc.wall_distance);
        summary.push(GapSummary {
            run_id: id.clone(),
            arm: e.arm.name.clone(),
            mode: e.arm.mode.to_string(),
            outcome: e.outcome.to_string(),
            steps: e.records.len(),
            initial_baseline: e.records.first().map_or(f64::NAN, |r| r.baseline_commanded),
            final_baseline: e.records.last().map_or(f64::NAN, |r| r.baseline_commanded),
            non_increasing: approach.windows(2).all(|w| w[1] <= w[0]),
            redetections: e.records.iter().filter(|r| r.redetected).count(),
        });
        records.extend(e.records.iter().cloned().map(|mut r| {
            r.run_id = id.clone();
            r
        }));
    }
    out.records("episodes.csv", &records)?;
    out.records("summary.csv", &summary)?;
    for s in &summary {
        println!("{:<12} {:<10} {} steps", s.arm, s.outcome, s.steps);
    }
    out.finish()
}

#[derive(Serialize)]
struct ImoSummary {
    run_id: String,
    arm: String,
    mode: String,
    outcome: String,
    tracked_steps: usize,
    lost_segments: usize,
    first_loss: Option<f64>,
    min_tracked_depth: Option<f64>,
    max_tracked_depth: Option<f64>,
    mean_error: Option<f64>,
}

#[derive(Serialize)]
struct ComparisonOut {
    run_id: String,
    arm: String,
    other: String,
    steps: usize,
    error: f64,
    other_error: f64,
}

fn mean_error(e: &ImoEpisode) -> Option<f64> {
    let errors: Vec<f64> = e.records.iter().filter_map(|r| r.error).collect();
    (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64)
}

pub fn sim_imo(a: &SimArgs) -> Result<(), Failure> {
    let rig = load_rig(&a.common)?;
    let (actuator, limits) = stroke(&rig)?;
    let dt = period(a.rate)?;
    let mut sc = reference_imo(a.common.seed).map_err(Failure::internal)?;
    if let Some(p) = &a.scene {
        sc.scene = load_scene_file(p).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?;
        sc.object = sc
            .scene
            .objects()
            .iter()
            .position(|o| o.trajectory.is_some())
            .ok_or_else(|| Failure::config("the scene has no moving object"))?;
    }
    let duration = sc.steps as f64 * sc.dt;
    sc.dt = dt;
    sc.steps = a.steps.unwrap_or((duration / dt).round() as usize);
    sc.actuator = actuator;
    sc.config.limits = limits;
    let arms = arms(a, &limits)?;
    let config = with(
        sim_config(a, &arms, sc.steps, dt, &actuator)?,
        json!({ "object": sc.object, "imo": sc.config, "sensor": sc.sensor }),
    );
    let decisions = with(
        shared_decisions(),
        json!({
            "detection": "ego-motion residual over a 1 s window, object = surface with the largest unexplained share",
            "loss": "unobservable, vanished, or depth error above the accuracy bound",
            "position": "mean pixel ray at the median depth",
        }),
    );
    let mut meta = RunMeta::new("sim-imo", config, decisions);
    meta.inputs = inputs(&a.common, a.scene.as_ref());
    let mut out = Output::new(&a.common, meta)?;
    let episodes = run_arms(&arms, a.parallel, |arm| run_imo(&sc, arm))?;
    let id = out.id();
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for e in &episodes {
        let lost = e.lost_segments();
        let range = e.tracked_depth_range();
        summary.push(ImoSummary {
            run_id: id.clone(),
            arm: e.arm.name.clone(),
            mode: e.arm.mode.to_string(),
            outcome: e.outcome.to_string(),
            tracked_steps: e.tracked_steps(),
            lost_segments: lost.len(),
            first_loss: lost.first().map(|s| s.0),
            min_tracked_depth: range.map(|r| r.0),
            max_tracked_depth: range.map(|r| r.1),
            mean_error: mean_error(e),
        });
        records.extend(e.records.iter().cloned().map(|mut r| {
            r.run_id = id.clone();
            r
        }));
    }
    out.records("episodes.csv", &records)?;
    out.records("summary.csv", &summary)?;
    if let Some(variable) = episodes.iter().find(|e| e.arm.mode.is_variable()) {
        let mut rows = Vec::new();
        for other in episodes.iter().filter(|e| !e.arm.mode.is_variable()) {
            let TrackingComparison {
                arm,
                other,
                steps,
                error,
                other_error,
            } = TrackingComparison::between(variable, other).map_err(Failure::internal)?;
            rows.push(ComparisonOut {
                run_id: id.clone(),
                arm,
                other,
                steps,
                error,
                other_error,
            });
        }
        if !rows.is_empty() {
            out.records("comparison.csv", &rows)?;
        }
    }
    for s in &summary {
        println!("{:<12} tracked {:>4} steps, {} lost segments", s.arm, s.tracked_steps, s.lost_segments);
    }
    out.finish()
}
