//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Exits 0 whatever the verdicts so the report is always produced; set
//! `VBSTEREO_ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{UnitQuaternion, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vbstereo::control::{detect_gap, GapConfig};
use vbstereo::error_analysis::{max_velocity_for_sync, table1_report, Parameter, RatioKind, Table1Setup};
use vbstereo::geometry::{
    depth_error, depth_from_disparity, project_with_distortion, undistort, CameraIntrinsics, CameraModel, DepthImage,
    DistortionCoefficients, ImageSize, RayGrid, StereoCalibration,
};
use vbstereo::rig::{fit_line, sclerp, sweep_actuator, ActuatorModel, DualQuaternionPose};
use vbstereo::scenario::{
    comparative_arms, object_mask, reference_forest, reference_gap, reference_imo, run_forest, run_gap, run_imo,
    write_records, ApertureShape, Arm, BaselineMode, Outcome, Sensor, TrackingComparison,
};
use vbstereo::sim::{render_depth, synthesize_disparity, Bounds, DisparityOptions, ObserverState, Scene, SceneObject, Shape, Wall};

const SIZE: ImageSize = ImageSize::new(128, 128);

const TABLE_ONE_BAND: (f64, f64) = (0.7, 1.3);
const TABLE_TWO_BAND: (f64, f64) = (1.5, 2.5);
const TABLE_EXACT: f64 = 1e-12;
const TABLE_RUNTIME: Duration = Duration::from_secs(30);
const SYNC_TUPLES: usize = 100;
const SYNC_TOLERANCE: f64 = 0.05;
const QUADRATIC_TOLERANCE: f64 = 1e-12;
const FINITE_DIFFERENCE_TOLERANCE: f64 = 0.02;
const FINITE_DIFFERENCE_MIN_DISPARITY: f64 = 20.0;
const SLOPE_TOLERANCE: f64 = 0.01;
const MAX_RESIDUAL: f64 = 0.00183;
const STROKE: (f64, f64) = (0.1, 0.26);
const ACTUATOR_NOISE: f64 = 0.007;
const ACTUATOR_POSITIONS: usize = 10;
const SCLERP_PAIRS: usize = 1000;
const SCLERP_TOLERANCE: f64 = 1e-9;
const SCLERP_EXACT: f64 = 1e-12;
const SCLERP_RUNTIME: Duration = Duration::from_secs(5);
const DISTORTION_SETS: usize = 100;
const DISTORTION_TOLERANCE: f64 = 1e-6;
const FOREST_RUNTIME: Duration = Duration::from_secs(120);
const GAP_AGREEMENT: f64 = 0.95;
const GAP_SEEDS: u64 = 3;
const HULL_SCENES: usize = 100;
const IMO_RANGE: (f64, f64) = (1.25, 9.75);
const SEED: u64 = 7;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let report = table1_report(&Table1Setup::default()).expect("table");
    let elapsed = start.elapsed();
    let within = |v: f64, (lo, hi): (f64, f64)| (lo..=hi).contains(&v);
    let mut bad = Vec::new();
    for c in &report.checks {
        let ok = match (c.parameter, c.kind) {
            (Parameter::F | Parameter::K1 | Parameter::K2 | Parameter::K5, RatioKind::YOverX) => within(c.value, TABLE_ONE_BAND),
            (Parameter::K3, RatioKind::YOverX) => within(c.value, TABLE_TWO_BAND),
            (Parameter::Alpha, RatioKind::YOverX) => c.value == 0.0,
            (p, _) if p.is_rotation() => c.value.abs() <= TABLE_EXACT,
            (Parameter::Tx | Parameter::Ty | Parameter::Tz, _) => (c.value - 1.0).abs() <= TABLE_EXACT,
            _ => true,
        };
        if !ok {
            bad.push(format!("{}@{}mm={}", c.parameter.name(), c.focal_length_mm, c.value));
        }
    }
    verdict(
        bad.is_empty() && elapsed < TABLE_RUNTIME,
        format!("{} ratios, {} outside band {bad:?}, {:.2} s", report.checks.len(), bad.len(), elapsed.as_secs_f64()),
    )
}

fn receding_disparity_error(z: f64, b: f64, f: f64, v: f64, dt: f64) -> f64 {
    let bounds = Bounds::new(Vector3::new(-60.0, -60.0, -60.0), Vector3::new(60.0, 60.0, 60.0)).unwrap();
    let wall = Wall::new(Vector3::new(z, 0.0, 1.0), Vector2::new(-1.0, 0.0), f64::INFINITY, f64::INFINITY, vec![]).unwrap();
    let scene = Scene::new(vec![SceneObject::fixed(Shape::Wall(wall))], bounds).unwrap();
    let cam = CameraModel::pinhole(CameraIntrinsics::centered(f, SIZE));
    let rays = RayGrid::new(&cam, SIZE).unwrap();
    let obs = ObserverState::new(Vector3::new(0.0, 0.0, 1.0), Vector3::x()).unwrap();
    let left = render_depth(&scene, &obs.camera_pose().unwrap(), &rays, 0.0);
    let opts = DisparityOptions {
        sync_offset: dt,
        observer_velocity: Vector3::new(-v, 0.0, 0.0),
        ..Default::default()
    };
    let d = synthesize_disparity(&scene, &left, &rays, &StereoCalibration::ideal(cam, b), &opts).unwrap();
    b * f / z - d.get(64, 64).unwrap()
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < SYNC_TUPLES {
        let (b, f, z) = (rng.gen_range(0.1..0.3), rng.gen_range(200.0..1000.0), rng.gen_range(1.0..10.0));
        let (k, dt) = (rng.gen_range(0.25..2.0), rng.gen_range(0.001..0.02));
        // first-order regime
        if b * f < 10.0 * k * z {
            continue;
        }
        let v = max_velocity_for_sync(k, z, b, f, dt).expect("bounded");
        let e = receding_disparity_error(z, b, f, v, dt);
        worst = worst.max((e - k).abs() / k);
        checked += 1;
    }
    verdict(worst <= SYNC_TOLERANCE, format!("{checked} tuples, worst relative error {worst:.2e}"))
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut ratio, mut fd): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let (b, f, e) = (rng.gen_range(0.05..0.5), rng.gen_range(50.0..2000.0), rng.gen_range(0.1..2.0));
        let z = rng.gen_range(0.1..50.0);
        let r = depth_error(2.0 * z, b, f, e).unwrap() / depth_error(z, b, f, e).unwrap();
        ratio = ratio.max((r - 4.0).abs());
        let d = rng.gen_range(FINITE_DIFFERENCE_MIN_DISPARITY..200.0);
        let z = depth_from_disparity(d, b, f).unwrap();
        let diff = depth_from_disparity(d - 0.5, b, f).unwrap() - depth_from_disparity(d + 0.5, b, f).unwrap();
        let closed = depth_error(z, b, f, 1.0).unwrap();
        fd = fd.max((diff - closed).abs() / closed);
    }
    verdict(
        ratio <= QUADRATIC_TOLERANCE && fd <= FINITE_DIFFERENCE_TOLERANCE,
        format!("ratio deviation {ratio:.1e}, finite-difference deviation {:.3}%", fd * 100.0),
    )
}

fn criterion_4() -> Verdict {
    let model = ActuatorModel::new(STROKE.0, STROKE.1, ACTUATOR_NOISE).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let samples = sweep_actuator(&model, ACTUATOR_POSITIONS, &mut rng).unwrap();
    let fit = fit_line(&samples).unwrap();
    verdict(
        (fit.slope - 1.0).abs() <= SLOPE_TOLERANCE && fit.max_residual <= MAX_RESIDUAL && samples.len() == 100,
        format!(
            "{} samples, slope {:.5}, max residual {:.3} mm",
            samples.len(),
            fit.slope,
            fit.max_residual * 1000.0
        ),
    )
}

fn random_pose(rng: &mut ChaCha8Rng) -> DualQuaternionPose {
    let r = UnitQuaternion::from_euler_angles(rng.gen_range(-3.0..3.0), rng.gen_range(-1.5..1.5), rng.gen_range(-3.0..3.0));
    let t = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    DualQuaternionPose::from_rotation_translation(r, t)
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut endpoint, mut unit, mut midpoint, mut rotation): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..SCLERP_PAIRS {
        let (a, b) = (random_pose(&mut rng), random_pose(&mut rng));
        endpoint = endpoint
            .max(sclerp(&a, &b, 0.0).unwrap().distance(&a))
            .max(sclerp(&a, &b, 1.0).unwrap().distance(&b));
        let t = rng.gen_range(0.0..1.0);
        let m = sclerp(&a, &b, t).unwrap();
        let (r0, r1) = m.unit_residuals();
        unit = unit.max(r0.abs()).max(r1.abs());
        rotation = rotation.max(m.rotation().angle_to(&a.rotation().slerp(&b.rotation(), t)));
        let (ta, tb) = (a.translation(), b.translation());
        let pa = DualQuaternionPose::from_rotation_translation(UnitQuaternion::identity(), ta);
        let pb = DualQuaternionPose::from_rotation_translation(UnitQuaternion::identity(), tb);
        midpoint = midpoint.max((sclerp(&pa, &pb, 0.5).unwrap().translation() - (ta + tb) / 2.0).norm());
    }
    let elapsed = start.elapsed();
    verdict(
        endpoint <= SCLERP_EXACT
            && midpoint <= SCLERP_EXACT
            && unit <= SCLERP_TOLERANCE
            && rotation <= SCLERP_TOLERANCE
            && elapsed < SCLERP_RUNTIME,
        format!(
            "{SCLERP_PAIRS} pairs, endpoint {endpoint:.1e}, unit {unit:.1e}, midpoint {midpoint:.1e}, rotation {rotation:.1e} rad, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let intr = CameraIntrinsics::centered(100.0, SIZE);
    let mut worst: f64 = 0.0;
    for _ in 0..DISTORTION_SETS {
        let k = DistortionCoefficients {
            k1: rng.gen_range(-0.3..0.3),
            k2: rng.gen_range(-0.1..0.1),
            k3: rng.gen_range(-0.01..0.01),
            k4: rng.gen_range(-0.01..0.01),
            k5: rng.gen_range(-0.02..0.02),
        };
        for j in 0..=16 {
            for i in 0..=16 {
                let p = Vector2::new(-0.64 + 0.08 * i as f64, -0.64 + 0.08 * j as f64);
                let pixel = project_with_distortion(p, &k, &intr).unwrap();
                let back = project_with_distortion(undistort(pixel, &k, &intr).unwrap(), &k, &intr).unwrap();
                worst = worst.max((back - pixel).norm());
            }
        }
    }
    verdict(
        worst < DISTORTION_TOLERANCE,
        format!("{DISTORTION_SETS} coefficient sets on a 17x17 grid, max residual {worst:.1e} px"),
    )
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let sc = reference_forest(SEED).unwrap();
    let episodes: Vec<_> = comparative_arms(&sc.policy.limits, vbstereo::control::DEFAULT_BASELINE_GAIN)
        .iter()
        .map(|a| run_forest(&sc, a).unwrap())
        .collect();
    let elapsed = start.elapsed();
    let [small, large, variable] = [0, 1, 2].map(|i| &episodes[i]);
    let ordered = matches!((small.completion_time, variable.completion_time), (Some(s), Some(v)) if v <= s);
    let pass = large.outcome == Outcome::Collided
        && small.outcome == Outcome::ReachedGoal
        && variable.outcome == Outcome::ReachedGoal
        && ordered
        && elapsed < FOREST_RUNTIME;
    let time = |t: Option<f64>| t.map_or("-".into(), |t| format!("{t:.1} s"));
    verdict(
        pass,
        format!(
            "fixed_small {} {}, fixed_large {}, variable {} {}, {:.1} s",
            small.outcome,
            time(small.completion_time),
            large.outcome,
            variable.outcome,
            time(variable.completion_time),
            elapsed.as_secs_f64()
        ),
    )
}

fn convex_hull(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn in_hull(hull: &[(f64, f64)], p: (f64, f64)) -> bool {
    let n = hull.len();
    let side = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    if n < 3 {
        let (a, b) = (hull[0], hull[n - 1]);
        let between = (p.0 - a.0) * (p.0 - b.0) <= 1e-9 && (p.1 - a.1) * (p.1 - b.1) <= 1e-9;
        return side(a, b).abs() < 1e-9 && between;
    }
    (0..n).all(|i| side(hull[i], hull[(i + 1) % n]) >= -1e-9)
}

fn hull_scenes() -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let size = ImageSize::new(40, 40);
    let (mut inside, mut detected) = (0, 0);
    for _ in 0..HULL_SCENES {
        let (x0, y0) = (rng.gen_range(0..30usize), rng.gen_range(0..30usize));
        let (w, h) = (rng.gen_range(4..30usize), rng.gen_range(4..30usize));
        let (near, gap, jitter) = (rng.gen_range(1.0..3.0), rng.gen_range(1.0..5.0), rng.gen_range(0.0..0.05));
        let values = (0..size.pixel_count())
            .map(|i| {
                let (x, y) = (i % 40, i / 40);
                let hole = (x0..x0 + w).contains(&x) && (y0..y0 + h).contains(&y);
                (if hole { near + gap } else { near }) + rng.gen_range(-jitter..=jitter)
            })
            .collect();
        let depth = DepthImage::from_values(size, values).unwrap();
        let Ok(state) = detect_gap(&depth, &GapConfig::default()) else {
            continue;
        };
        detected += 1;
        let pixels = state.cluster(state.safest_cluster);
        let larger = state.foreground.len().max(state.background.len());
        let hull = convex_hull(pixels.iter().map(|&i| ((i % 40) as f64, (i / 40) as f64)).collect());
        let p = state.safest_point;
        if pixels.len() == larger && in_hull(&hull, (p.x, p.y)) {
            inside += 1;
        }
    }
    (inside, detected)
}

fn criterion_8() -> Verdict {
    let mut worst: f64 = 1.0;
    let mut monotone = 0;
    let mut episodes = 0;
    for shape in ApertureShape::ALL {
        for seed in 0..GAP_SEEDS {
            let sc = reference_gap(shape, seed).unwrap();
            let sensor = Sensor::new(sc.sensor).unwrap();
            let pose = ObserverState::new(sc.start, sc.heading).unwrap().camera_pose().unwrap();
            let obs = sensor.observe(&sc.scene, &pose, 0.0, 0.3, 0.3).unwrap();
            let found = detect_gap(&obs.depth, &GapConfig::default()).unwrap().background_mask();
            let truth = object_mask(&obs.render, sc.background_object);
            let agree = truth.iter().zip(&found).filter(|(a, b)| a == b).count();
            worst = worst.min(agree as f64 / truth.len() as f64);
        }
        let sc = reference_gap(shape, SEED).unwrap();
        let arm = Arm::new("variable", BaselineMode::Variable { gain: vbstereo::control::DEFAULT_BASELINE_GAIN });
        let e = run_gap(&sc, &arm).unwrap();
        let approach = e.approach_baselines(sc.start.x + sc.wall_distance);
        episodes += 1;
        if approach.len() > 1 && approach.windows(2).all(|w| w[1] <= w[0]) {
            monotone += 1;
        }
    }
    let (inside, detected) = hull_scenes();
    verdict(
        worst >= GAP_AGREEMENT && inside == HULL_SCENES && detected == HULL_SCENES && monotone == episodes,
        format!(
            "worst mask agreement {:.2}%, safest point in hull {inside}/{HULL_SCENES} ({detected} detected), non-increasing approaches {monotone}/{episodes}",
            worst * 100.0
        ),
    )
}

fn criterion_9() -> Verdict {
    let sc = reference_imo(SEED).unwrap();
    let episodes: Vec<_> = comparative_arms(&sc.config.limits, vbstereo::control::DEFAULT_BASELINE_GAIN)
        .iter()
        .map(|a| run_imo(&sc, a).unwrap())
        .collect();
    let variable = &episodes[2];
    let range = variable.tracked_depth_range();
    let spans = matches!(range, Some((lo, hi)) if lo <= IMO_RANGE.0 && hi >= IMO_RANGE.1);
    let mut pass = spans && variable.lost_segments().is_empty();
    let mut parts = vec![match range {
        Some((lo, hi)) => format!("variable tracks {lo:.2}-{hi:.2} m, {} lost", variable.lost_segments().len()),
        None => "variable never tracks".into(),
    }];
    for other in &episodes[..2] {
        let lost = other.lost_segments();
        let c = TrackingComparison::between(variable, other).unwrap();
        pass &= !lost.is_empty() && c.error <= c.other_error;
        parts.push(format!(
            "{}: {} lost, error {:.4} vs {:.4} over {} steps",
            other.arm.name,
            lost.len(),
            c.error,
            c.other_error,
            c.steps
        ));
    }
    verdict(pass, parts.join("; "))
}

fn logs_of<T: serde::Serialize>(rows: &[T]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_records(&mut buf, rows).unwrap();
    buf
}

fn binary_run(dir: &std::path::Path) -> Vec<Vec<u8>> {
    let status = Command::new(env!("CARGO_BIN_EXE_vbstereo"))
        .args(["sim-imo", "--parallel", "--seed", "3", "--out"])
        .arg(dir)
        .output()
        .expect("binary runs")
        .status;
    assert!(status.success());
    ["episodes.csv", "summary.csv", "comparison.csv", "run.json"]
        .iter()
        .map(|f| std::fs::read(dir.join(f)).unwrap())
        .collect()
}

fn criterion_10() -> Verdict {
    let forest = reference_forest(SEED).unwrap();
    let gap = reference_gap(ApertureShape::Hexagon, SEED).unwrap();
    let imo = reference_imo(SEED).unwrap();
    let arms = comparative_arms(&forest.policy.limits, vbstereo::control::DEFAULT_BASELINE_GAIN);
    let run = || -> Vec<u8> {
        let mut out = Vec::new();
        for a in &arms {
            out.extend(logs_of(&run_forest(&forest, a).unwrap().records));
            out.extend(logs_of(&run_gap(&gap, a).unwrap().records));
            out.extend(logs_of(&run_imo(&imo, a).unwrap().records));
        }
        out
    };
    let library = run() == run();
    let tmp = tempfile::tempdir().unwrap();
    let binary = binary_run(&tmp.path().join("a")) == binary_run(&tmp.path().join("b"));
    verdict(
        library && binary,
        format!("library logs identical: {library}, binary outputs identical: {binary}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("error ratio table", criterion_1),
        ("sync bound consistency", criterion_2),
        ("depth error law", criterion_3),
        ("actuator calibration", criterion_4),
        ("screw interpolation", criterion_5),
        ("distortion round trip", criterion_6),
        ("forest comparative", criterion_7),
        ("gap suite", criterion_8),
        ("moving object comparative", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    let strict = std::env::var("VBSTEREO_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
