use nalgebra::{Matrix3, Vector2};
use rayon::prelude::*;

use super::{ErrorGrid, Parameter, PerturbationSpec, StereoErrorField};
use crate::error::{Error, Result};
use crate::geometry::{rotation_from_rpy, ImageSize, StereoCalibration, StereoExtrinsics};

/// `T~ = T (1 + e/100)` per component, or `R~ = R R_e`.
pub fn perturb_extrinsics(
    ext: &StereoExtrinsics,
    spec: &PerturbationSpec,
) -> Result<StereoExtrinsics> {
    spec.validate()?;
    let mut out = *ext;
    let angle = spec.magnitude.to_radians();
    match spec.parameter {
        Parameter::Tx => out.translation.x = spec.scale(out.translation.x),
        Parameter::Ty => out.translation.y = spec.scale(out.translation.y),
        Parameter::Tz => out.translation.z = spec.scale(out.translation.z),
        Parameter::Roll => out.rotation *= rotation_from_rpy(angle, 0.0, 0.0),
        Parameter::Pitch => out.rotation *= rotation_from_rpy(0.0, angle, 0.0),
        Parameter::Yaw => out.rotation *= rotation_from_rpy(0.0, 0.0, angle),
        p => {
            return Err(Error::invalid(format!(
                "{} is not an extrinsic parameter",
                p.name()
            )))
        }
    }
    Ok(out)
}

/// Displacement of rectified pixel locations in both cameras when the
/// rectification is built from perturbed extrinsics.
pub fn extrinsic_error_field(
    spec: &PerturbationSpec,
    rig: &StereoCalibration,
    size: ImageSize,
) -> Result<StereoErrorField> {
    let nominal = rig.rectification()?;
    let mut perturbed_rig = *rig;
    perturbed_rig.extrinsics = perturb_extrinsics(&rig.extrinsics, spec)?;
    let perturbed = perturbed_rig.rectification()?;
    Ok(StereoErrorField {
        left: homography_field(&nominal.h_left, &perturbed.h_left, size),
        right: homography_field(&nominal.h_right, &perturbed.h_right, size),
    })
}

fn homography_field(nominal: &Matrix3<f64>, perturbed: &Matrix3<f64>, size: ImageSize) -> ErrorGrid {
    let apply = |h: &Matrix3<f64>, p: Vector2<f64>| {
        let q = h * p.push(1.0);
        Vector2::new(q.x / q.z, q.y / q.z)
    };
    let (ex, ey) = (0..size.pixel_count())
        .into_par_iter()
        .map(|i| {
            let p = Vector2::new((i % size.width) as f64, (i / size.width) as f64);
            let d = apply(perturbed, p) - apply(nominal, p);
            (d.x.abs(), d.y.abs())
        })
        .unzip();
    ErrorGrid { size, ex, ey }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CameraIntrinsics, CameraModel};
    use nalgebra::Vector3;

    const SIZE: ImageSize = ImageSize::new(128, 128);

    fn rig() -> StereoCalibration {
        let cam = CameraModel::pinhole(CameraIntrinsics::new(90.0, 90.0, 64.0, 64.0, 0.001).unwrap());
        let mut rig = StereoCalibration::ideal(cam, 0.2);
        rig.extrinsics.translation = Vector3::new(0.2, 0.004, 0.002);
        rig
    }

    fn spec(p: Parameter, m: f64) -> PerturbationSpec {
        PerturbationSpec::new(p, m).unwrap()
    }

    #[test]
    fn zero_magnitude_gives_zero_fields() {
        for p in Parameter::EXTRINSIC {
            let f = extrinsic_error_field(&spec(p, 0.0), &rig(), SIZE).unwrap();
            assert!(f.left.is_zero() && f.right.is_zero(), "{p:?}");
        }
    }

    #[test]
    fn rotation_errors_leave_left_camera_untouched() {
        for p in [Parameter::Roll, Parameter::Pitch, Parameter::Yaw] {
            let f = extrinsic_error_field(&spec(p, 0.1), &rig(), SIZE).unwrap();
            assert!(f.left.is_zero(), "{p:?}");
            assert!(f.right.summary().ex_max.max(f.right.summary().ey_max) > 0.0);
            assert_eq!(f.left_right_ratios(), (0.0, 0.0));
        }
    }

    #[test]
    fn translation_errors_affect_both_cameras_equally() {
        for p in [Parameter::Tx, Parameter::Ty, Parameter::Tz] {
            let f = extrinsic_error_field(&spec(p, 1.0), &rig(), SIZE).unwrap();
            let (rx, ry) = f.left_right_ratios();
            assert!((rx - 1.0).abs() < 1e-6 && (ry - 1.0).abs() < 1e-6, "{p:?} {rx} {ry}");
        }
    }

    #[test]
    fn rejects_intrinsic_parameter() {
        assert!(extrinsic_error_field(&spec(Parameter::K1, 1.0), &rig(), SIZE).is_err());
    }
}
