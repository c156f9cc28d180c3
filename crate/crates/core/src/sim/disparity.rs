use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::render::Render;
use super::scene::Scene;
use crate::error::Result;
use crate::geometry::{DisparityImage, RayGrid, StereoCalibration};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisparityOptions {
    /// Round to the nearest integer pixel.
    pub quantize: bool,
    /// Right-camera capture delay, seconds.
    pub sync_offset: f64,
    /// Observer velocity during the delay, world m/s.
    pub observer_velocity: Vector3<f64>,
    /// Disparities below this are invalid (after rounding).
    pub min_disparity: Option<f64>,
    /// Disparities above this are invalid (matcher search range).
    pub max_disparity: Option<f64>,
}

impl Default for DisparityOptions {
    fn default() -> Self {
        Self {
            quantize: false,
            sync_offset: 0.0,
            observer_velocity: Vector3::zeros(),
            min_disparity: None,
            max_disparity: None,
        }
    }
}

/// Disparity for the rectified pair whose left view is `left`.
///
/// Without a sync offset this is `d = b f / Z` with `b = |T|` and `f` the left
/// focal length. With an offset, each surface point is advanced by its
/// object's motion over the delay and projected into a right camera that has
/// also moved by `v delta_t`.
pub fn synthesize_disparity(
    scene: &Scene,
    left: &Render,
    rays: &RayGrid,
    calib: &StereoCalibration,
    options: &DisparityOptions,
) -> Result<DisparityImage> {
    let b = calib.extrinsics.baseline();
    let f = calib.focal_px();
    crate::error::ensure_positive("baseline", b)?;
    crate::error::ensure_positive("focal length", f)?;
    let dt = options.sync_offset;
    crate::error::ensure_finite("sync offset", dt)?;
    let right = {
        let mut p = left.pose.shifted(&Vector3::new(b, 0.0, 0.0));
        p.position += options.observer_velocity * dt;
        p
    };
    let mut out = DisparityImage::invalid(left.depth.size());
    for i in 0..left.depth.values().len() {
        let Some(z) = left.depth.get_index(i) else {
            continue;
        };
        let mut d = if dt == 0.0 {
            b * f / z
        } else {
            let ray = rays.rays()[i];
            let mut world = left.pose.to_world(&(ray * z));
            if let Some(id) = left.object[i] {
                let obj = &scene.objects()[id];
                world += obj.displacement(left.time + dt) - obj.displacement(left.time);
            }
            let c = right.to_camera(&world);
            if c.z <= 0.0 {
                continue;
            }
            f * (ray.x - c.x / c.z)
        };
        if options.quantize {
            d = d.round();
        }
        if options.min_disparity.is_some_and(|m| d < m) || options.max_disparity.is_some_and(|m| d > m) {
            continue;
        }
        out.set_index(i, Some(d));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{depth_error, depth_image_from_disparity, CameraIntrinsics, CameraModel, ImageSize};
    use crate::sim::{render_depth, Bounds, ObserverState, SceneObject, Shape, Wall};
    use nalgebra::Vector2;

    const SIZE: ImageSize = ImageSize::new(128, 128);

    fn setup(z: f64) -> (Scene, ObserverState, RayGrid, StereoCalibration) {
        let cam = CameraModel::pinhole(CameraIntrinsics::centered(100.0, SIZE));
        let bounds = Bounds::new(Vector3::new(-50.0, -50.0, -50.0), Vector3::new(50.0, 50.0, 50.0)).unwrap();
        let wall = Wall::new(Vector3::new(z, 0.0, 1.0), Vector2::new(-1.0, 0.0), f64::INFINITY, f64::INFINITY, vec![]).unwrap();
        let scene = Scene::new(vec![SceneObject::fixed(Shape::Wall(wall))], bounds).unwrap();
        let obs = ObserverState::new(Vector3::new(0.0, 0.0, 1.0), Vector3::x()).unwrap();
        (scene, obs, RayGrid::new(&cam, SIZE).unwrap(), StereoCalibration::ideal(cam, 0.2))
    }

    #[test]
    fn plane_has_constant_disparity() {
        let (scene, obs, rays, calib) = setup(4.0);
        let left = render_depth(&scene, &obs.camera_pose().unwrap(), &rays, 0.0);
        let d = synthesize_disparity(&scene, &left, &rays, &calib, &DisparityOptions::default()).unwrap();
        assert_eq!(d.valid_count(), SIZE.pixel_count());
        assert!(d.iter_valid().all(|(_, _, v)| (v - 5.0).abs() < 1e-12));
    }

    #[test]
    fn quantization_bounds() {
        let (scene, obs, rays, calib) = setup(3.3);
        let left = render_depth(&scene, &obs.camera_pose().unwrap(), &rays, 0.0);
        let exact = synthesize_disparity(&scene, &left, &rays, &calib, &DisparityOptions::default()).unwrap();
        let opts = DisparityOptions {
            quantize: true,
            ..Default::default()
        };
        let q = synthesize_disparity(&scene, &left, &rays, &calib, &opts).unwrap();
        for i in 0..q.values().len() {
            assert!((q.values()[i] - exact.values()[i]).abs() <= 0.5);
        }
        let depth = depth_image_from_disparity(&q, 0.2, 100.0).unwrap();
        let bound = depth_error(3.3, 0.2, 100.0, 0.5).unwrap();
        for (x, y, z) in depth.iter_valid() {
            let truth = left.depth.get(x, y).unwrap();
            // first-order bound plus the curvature of 1/d over half a pixel
            assert!((z - truth).abs() <= bound * 1.1, "{z} {truth}");
        }
    }

    #[test]
    fn lateral_sync_bias() {
        let (scene, obs, rays, calib) = setup(2.0);
        let left = render_depth(&scene, &obs.camera_pose().unwrap(), &rays, 0.0);
        let (v, dt) = (0.8, 0.01);
        // camera right is -y for an east heading
        let opts = DisparityOptions {
            sync_offset: dt,
            observer_velocity: Vector3::new(0.0, -v, 0.0),
            ..Default::default()
        };
        let d = synthesize_disparity(&scene, &left, &rays, &calib, &opts).unwrap();
        let bias = d.get(64, 64).unwrap() - 0.2 * 100.0 / 2.0;
        let expected = 100.0 * v * dt / 2.0;
        assert!((bias - expected).abs() / expected < 0.05, "{bias} {expected}");
    }

    #[test]
    fn range_limits() {
        let (scene, obs, rays, calib) = setup(4.0);
        let left = render_depth(&scene, &obs.camera_pose().unwrap(), &rays, 0.0);
        let opts = DisparityOptions {
            max_disparity: Some(4.0),
            ..Default::default()
        };
        let d = synthesize_disparity(&scene, &left, &rays, &calib, &opts).unwrap();
        assert_eq!(d.valid_count(), 0);
    }
}
