use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vbstereo::geometry::{CameraIntrinsics, CameraModel, DepthImage, ImageSize};
use vbstereo::rig::{load_rig_file, write_rig_file, ActuatorModel, CalibrationTable, RigFile, SyntheticTableConfig};
use vbstereo::scenario::reference_imo;
use vbstereo::sim::{load_scene_file, read_grid_file, scene_file_string, write_grid_file};

#[test]
fn rig_file_round_trip() {
    let size = ImageSize::new(128, 128);
    let camera = CameraModel::pinhole(CameraIntrinsics::centered(100.0, size));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let table = CalibrationTable::synthetic(&SyntheticTableConfig::standard(camera, 0.2), &mut rng).unwrap();
    let (lo, hi) = table.range();
    let rig = RigFile {
        image: Some(size),
        actuator: Some(ActuatorModel::new(lo, hi, 0.007).unwrap()),
        table,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rig.toml");
    write_rig_file(&path, &rig).unwrap();
    let back = load_rig_file(&path).unwrap();
    assert_eq!(back.actuator, rig.actuator);
    for (a, b) in back.table.entries().iter().zip(rig.table.entries()) {
        assert!((a.extrinsics.rotation - b.extrinsics.rotation).norm() < 1e-12);
        assert!((a.extrinsics.translation - b.extrinsics.translation).norm() < 1e-15);
    }
}

#[test]
fn missing_rig_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(load_rig_file(dir.path().join("absent.toml")).is_err());
}

#[test]
fn depth_grid_round_trip() {
    let size = ImageSize::new(5, 3);
    let values = (0..15).map(|i| if i % 4 == 0 { f64::NAN } else { 0.5 + i as f64 / 7.0 }).collect();
    let depth = DepthImage::from_values(size, values).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("depth.csv");
    write_grid_file(&path, &depth).unwrap();
    let back: DepthImage = read_grid_file(&path).unwrap();
    assert_eq!(back.mask(), depth.mask());
    for ((_, _, a), (_, _, b)) in back.iter_valid().zip(depth.iter_valid()) {
        assert_eq!(a, b);
    }
}

#[test]
fn scene_file_round_trip() {
    let scene = reference_imo(7).unwrap().scene;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scene.toml");
    std::fs::write(&path, scene_file_string(&scene).unwrap()).unwrap();
    let back = load_scene_file(&path).unwrap();
    assert_eq!(scene_file_string(&back).unwrap(), scene_file_string(&scene).unwrap());
}
