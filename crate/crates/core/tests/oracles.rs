use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vbstereo::control::{detect_gap, detect_imo, DepthFrame, GapConfig};
use vbstereo::error_analysis::max_velocity_for_sync;
use vbstereo::geometry::{CameraIntrinsics, CameraModel, ImageSize, RayGrid, StereoCalibration};
use vbstereo::scenario::{object_mask, reference_gap, reference_imo, ApertureShape, Sensor};
use vbstereo::sim::{render_depth, synthesize_disparity, Bounds, DisparityOptions, ObserverState, Scene, SceneObject, Shape, Wall};

const SIZE: ImageSize = ImageSize::new(128, 128);

fn wall_scene(z: f64) -> Scene {
    let bounds = Bounds::new(Vector3::new(-60.0, -60.0, -60.0), Vector3::new(60.0, 60.0, 60.0)).unwrap();
    let wall = Wall::new(Vector3::new(z, 0.0, 1.0), Vector2::new(-1.0, 0.0), f64::INFINITY, f64::INFINITY, vec![]).unwrap();
    Scene::new(vec![SceneObject::fixed(Shape::Wall(wall))], bounds).unwrap()
}

/// Disparity error at the principal point when the right view is taken
/// `dt` later while the observer recedes at `v`.
fn receding_disparity_error(z: f64, b: f64, f: f64, v: f64, dt: f64) -> f64 {
    let scene = wall_scene(z);
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

#[test]
fn sync_bound_matches_rendered_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 100 {
        let (b, f, z) = (rng.gen_range(0.1..0.3), rng.gen_range(200.0..1000.0), rng.gen_range(1.0..10.0));
        let (k, dt) = (rng.gen_range(0.25..2.0), rng.gen_range(0.001..0.02));
        if b * f < 10.0 * k * z {
            continue;
        }
        let v = max_velocity_for_sync(k, z, b, f, dt).unwrap();
        let e = receding_disparity_error(z, b, f, v, dt);
        assert!((e - k).abs() / k < 0.05, "b {b} f {f} z {z} k {k} dt {dt}: {e}");
        checked += 1;
    }
}

#[test]
fn reference_value_by_rendering() {
    let v = max_velocity_for_sync(1.0, 1.0, 0.2, 1000.0, 0.005).unwrap();
    let e = receding_disparity_error(1.0, 0.2, 1000.0, v, 0.005);
    assert!((e - 1.0).abs() < 1e-9, "{e}");
}

#[test]
fn gap_detection_recovers_aperture() {
    for shape in ApertureShape::ALL {
        for seed in 0..3 {
            let sc = reference_gap(shape, seed).unwrap();
            let sensor = Sensor::new(sc.sensor).unwrap();
            let pose = ObserverState::new(sc.start, sc.heading).unwrap().camera_pose().unwrap();
            let obs = sensor.observe(&sc.scene, &pose, 0.0, 0.3, 0.3).unwrap();
            let state = detect_gap(&obs.depth, &GapConfig::default()).unwrap();
            let truth = object_mask(&obs.render, sc.background_object);
            let found = state.background_mask();
            let agree = truth.iter().zip(&found).filter(|(a, b)| a == b).count();
            let share = agree as f64 / truth.len() as f64;
            assert!(share >= 0.95, "{shape:?} seed {seed}: {share}");
            assert!(truth.iter().any(|&t| t));
        }
    }
}

#[test]
fn receding_cube_is_detected() {
    let sc = reference_imo(7).unwrap();
    let sensor = Sensor::new(sc.sensor).unwrap();
    let pose = ObserverState::new(sc.start, sc.heading).unwrap().camera_pose().unwrap();
    let frame = |t: f64| {
        let obs = sensor.observe(&sc.scene, &pose, t, 0.2, 0.2).unwrap();
        let depth = obs.depth.clone();
        (obs, DepthFrame { depth, pose, focal_baseline: 20.0, time: t })
    };
    let (_, a) = frame(2.0);
    let (obs, b) = frame(3.0);
    let det = detect_imo(&a, &b, &sensor.camera, &sensor.rays, &sc.config).unwrap().unwrap();
    let truth = object_mask(&obs.render, sc.object);
    let inside = det.mask.iter().filter(|&&i| truth[i]).count();
    assert!(inside as f64 >= 0.9 * det.mask.len() as f64);
    let visible = (0..truth.len()).filter(|&i| truth[i] && obs.depth.mask()[i]).count();
    assert!(det.mask.len() as f64 >= 0.5 * visible as f64);
}
