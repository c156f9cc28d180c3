use nalgebra::{Matrix3, Rotation3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::camera::{CameraIntrinsics, CameraModel};
use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Pose of the right camera relative to the left one.
///
/// `translation` is the right optical centre expressed in the left frame and
/// `rotation` maps left-frame directions into the right frame, so a point
/// transforms as `X_R = R (X_L - T)`. A rig whose right camera sits 0.2 m to
/// the right of the left one has `T = [0.2, 0, 0]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StereoExtrinsics {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl StereoExtrinsics {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let ext = Self {
            rotation,
            translation,
        };
        ext.validate()?;
        Ok(ext)
    }

    /// Parallel cameras separated by `baseline` metres along x.
    pub fn horizontal(baseline: f64) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::new(baseline, 0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rotation.iter().chain(self.translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("extrinsics contain non-finite values"));
        }
        let gram = self.rotation.transpose() * self.rotation - Matrix3::identity();
        if gram.amax() > ORTHONORMAL_TOL {
            return Err(Error::invalid(format!(
                "rotation is not orthonormal (max |R^T R - I| = {:e})",
                gram.amax()
            )));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::invalid(format!("rotation determinant {det} != +1")));
        }
        if !(self.translation.norm() > 0.0) {
            return Err(Error::invalid("translation must be non-zero"));
        }
        Ok(())
    }

    pub fn baseline(&self) -> f64 {
        self.translation.norm()
    }
}

/// Complete calibration of the rig at one baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StereoCalibration {
    /// Nominal baseline key in metres.
    pub baseline: f64,
    pub left: CameraModel,
    pub right: CameraModel,
    pub extrinsics: StereoExtrinsics,
}

impl StereoCalibration {
    /// Ideal rig: identical cameras, parallel axes, horizontal baseline.
    pub fn ideal(camera: CameraModel, baseline: f64) -> Self {
        Self {
            baseline,
            left: camera,
            right: camera,
            extrinsics: StereoExtrinsics::horizontal(baseline),
        }
    }

    pub fn rectification(&self) -> Result<RectificationPair> {
        rectification_pair(&self.left.intrinsics, &self.right.intrinsics, &self.extrinsics)
    }

    /// Focal length used for disparity-to-depth conversion (left `fx`).
    pub fn focal_px(&self) -> f64 {
        self.left.intrinsics.fx
    }
}

/// `R = Rz(yaw) * Ry(pitch) * Rx(roll)`, angles in radians.
pub fn rotation_from_rpy(roll: f64, pitch: f64, yaw: f64) -> Matrix3<f64> {
    let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), yaw);
    let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), pitch);
    let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), roll);
    (rz * ry * rx).into_inner()
}

/// Pure-rotation homographies that make epipolar lines horizontal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RectificationPair {
    pub h_left: Matrix3<f64>,
    pub h_right: Matrix3<f64>,
    pub r_rect: Matrix3<f64>,
}

impl RectificationPair {
    pub fn rectify_left(&self, pixel: Vector2<f64>) -> Vector2<f64> {
        apply_homography(&self.h_left, pixel)
    }

    pub fn rectify_right(&self, pixel: Vector2<f64>) -> Vector2<f64> {
        apply_homography(&self.h_right, pixel)
    }
}

fn apply_homography(h: &Matrix3<f64>, p: Vector2<f64>) -> Vector2<f64> {
    let q = h * Vector3::new(p.x, p.y, 1.0);
    Vector2::new(q.x / q.z, q.y / q.z)
}

/// Builds `R_rect` from the baseline direction and the two homographies
/// `H_L = K_L R_rect K_L^-1`, `H_R = K_R R_rect R^T K_R^-1`.
pub fn rectification_pair(
    intr_left: &CameraIntrinsics,
    intr_right: &CameraIntrinsics,
    ext: &StereoExtrinsics,
) -> Result<RectificationPair> {
    ext.validate()?;
    let r_x = ext.translation / ext.translation.norm();
    let z_axis = Vector3::z();
    let orth = z_axis - r_x * z_axis.dot(&r_x);
    let n = orth.norm();
    if n < 1e-12 {
        return Err(Error::DegenerateGeometry(
            "baseline is parallel to the optical axis".into(),
        ));
    }
    let r_z = orth / n;
    let r_y = r_z.cross(&r_x);
    let r_rect = Matrix3::from_rows(&[r_x.transpose(), r_y.transpose(), r_z.transpose()]);
    let h_left = intr_left.matrix() * r_rect * intr_left.inverse_matrix();
    let h_right =
        intr_right.matrix() * r_rect * ext.rotation.transpose() * intr_right.inverse_matrix();
    Ok(RectificationPair {
        h_left,
        h_right,
        r_rect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(300.0, 300.0, 64.0, 64.0, 0.0).unwrap()
    }

    #[test]
    fn horizontal_rig_is_already_rectified() {
        let pair = rectification_pair(&k(), &k(), &StereoExtrinsics::horizontal(0.2)).unwrap();
        assert_abs_diff_eq!(pair.r_rect, Matrix3::identity(), epsilon = 1e-15);
        assert_abs_diff_eq!(pair.h_left, Matrix3::identity(), epsilon = 1e-12);
        assert_abs_diff_eq!(pair.h_right, Matrix3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn vertical_rig_rows() {
        let ext = StereoExtrinsics::new(Matrix3::identity(), Vector3::new(0.0, 0.2, 0.0)).unwrap();
        let pair = rectification_pair(&k(), &k(), &ext).unwrap();
        let expected = Matrix3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_abs_diff_eq!(pair.r_rect, expected, epsilon = 1e-15);
    }

    #[test]
    fn axial_baseline_is_degenerate() {
        let ext = StereoExtrinsics::new(Matrix3::identity(), Vector3::new(0.0, 0.0, 0.2)).unwrap();
        assert!(matches!(
            rectification_pair(&k(), &k(), &ext),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn rejects_bad_rotation() {
        let mut r = Matrix3::identity();
        r[(0, 0)] = 1.01;
        assert!(StereoExtrinsics::new(r, Vector3::x()).is_err());
        assert!(StereoExtrinsics::new(-Matrix3::identity(), Vector3::x()).is_err());
        assert!(StereoExtrinsics::new(Matrix3::identity(), Vector3::zeros()).is_err());
    }

    #[test]
    fn rectified_rows_agree_for_pitched_rig() {
        let ext = StereoExtrinsics::new(
            rotation_from_rpy(0.0, 1f64.to_radians(), 0.0),
            Vector3::new(0.2, 0.0, 0.0),
        )
        .unwrap();
        let pair = rectification_pair(&k(), &k(), &ext).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let z = rng.gen_range(1.0..10.0);
            let p_left = Vector3::new(rng.gen_range(-0.3..0.3) * z, rng.gen_range(-0.3..0.3) * z, z);
            let p_right = ext.rotation * (p_left - ext.translation);
            let pix = |p: Vector3<f64>| {
                let q = k().matrix() * (p / p.z);
                Vector2::new(q.x, q.y)
            };
            let l = pair.rectify_left(pix(p_left));
            let r = pair.rectify_right(pix(p_right));
            assert!((l.y - r.y).abs() < 1e-6, "row mismatch {} vs {}", l.y, r.y);
        }
    }

    #[test]
    fn rpy_composition_order() {
        let r = rotation_from_rpy(0.1, 0.2, 0.3);
        let expected = Rotation3::from_euler_angles(0.1, 0.2, 0.3).into_inner();
        assert_abs_diff_eq!(r, expected, epsilon = 1e-14);
    }
}
