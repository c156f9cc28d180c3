use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::StereoExtrinsics;

/// Screw angles below this (radians) interpolate the dual part linearly.
pub const SCLERP_SMALL_ANGLE: f64 = 1e-8;

const UNIT_TOL: f64 = 1e-9;

/// Rigid pose of the right camera in the left frame as a unit dual quaternion
/// `real + eps dual`, with `dual = t real / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualQuaternionPose {
    pub real: Quaternion<f64>,
    pub dual: Quaternion<f64>,
}

impl DualQuaternionPose {
    pub const IDENTITY: Self = Self {
        real: Quaternion::new(1.0, 0.0, 0.0, 0.0),
        dual: Quaternion::new(0.0, 0.0, 0.0, 0.0),
    };

    /// From a rotation (camera-to-reference) and the camera position.
    pub fn from_rotation_translation(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        let real = *rotation.quaternion();
        let t = Quaternion::from_imag(translation);
        Self {
            real,
            dual: t * real * 0.5,
        }
        .canonical()
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_quaternion(self.real)
    }

    pub fn translation(&self) -> Vector3<f64> {
        (self.dual * self.real.conjugate() * 2.0).imag()
    }

    /// Sign representative with `real.w >= 0`.
    pub fn canonical(self) -> Self {
        if self.real.w < 0.0 {
            Self {
                real: -self.real,
                dual: -self.dual,
            }
        } else {
            self
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            real: self.real.conjugate(),
            dual: self.dual.conjugate(),
        }
    }

    /// `|real| - 1` and `real . dual`.
    pub fn unit_residuals(&self) -> (f64, f64) {
        (
            self.real.norm() - 1.0,
            self.real.coords.dot(&self.dual.coords),
        )
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        let (a, b) = self.unit_residuals();
        a.abs() <= tol && b.abs() <= tol
    }

    pub fn validate(&self) -> Result<()> {
        if self.real.coords.iter().chain(self.dual.coords.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("dual quaternion has non-finite components"));
        }
        let (a, b) = self.unit_residuals();
        if a.abs() > UNIT_TOL || b.abs() > UNIT_TOL {
            return Err(Error::invalid(format!(
                "not a unit dual quaternion (|real| - 1 = {a:e}, real.dual = {b:e})"
            )));
        }
        Ok(())
    }

    /// Projects onto the unit dual quaternions.
    pub fn normalize(&self) -> Self {
        let n = self.real.norm();
        let real = self.real / n;
        let dual = self.dual / n;
        let dual = dual - real * real.coords.dot(&dual.coords);
        Self { real, dual }
    }

    /// Uniform distance used for continuity checks.
    pub fn distance(&self, other: &Self) -> f64 {
        let a = self.canonical();
        let b = other.canonical();
        (a.real - b.real).norm().max((a.dual - b.dual).norm())
    }
}

impl std::ops::Mul for DualQuaternionPose {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self {
            real: self.real * rhs.real,
            dual: self.real * rhs.dual + self.dual * rhs.real,
        }
    }
}

pub fn pose_to_dual_quaternion(ext: &StereoExtrinsics) -> Result<DualQuaternionPose> {
    ext.validate()?;
    let r = Rotation3::from_matrix_unchecked(ext.rotation.transpose());
    Ok(DualQuaternionPose::from_rotation_translation(
        UnitQuaternion::from_rotation_matrix(&r),
        ext.translation,
    ))
}

pub fn dual_quaternion_to_pose(dq: &DualQuaternionPose) -> Result<StereoExtrinsics> {
    dq.validate()?;
    let rotation: Matrix3<f64> = dq.rotation().to_rotation_matrix().into_inner().transpose();
    StereoExtrinsics::new(rotation, dq.translation())
}

/// `(real, dual)` of `q^tau` for a unit dual quaternion with `real.w >= 0`.
fn power(q: &DualQuaternionPose, tau: f64) -> DualQuaternionPose {
    let v = q.real.imag();
    let s = v.norm();
    let theta = 2.0 * s.atan2(q.real.w);
    let t = q.translation();
    if theta < SCLERP_SMALL_ANGLE {
        let real = UnitQuaternion::identity()
            .nlerp(&UnitQuaternion::new_unchecked(q.real), tau);
        return DualQuaternionPose::from_rotation_translation(real, t * tau);
    }
    let l = v / s;
    let d = t.dot(&l);
    let half = theta / 2.0;
    let m = (t.cross(&l) + (t - l * d) / half.tan()) * 0.5;
    let (sin, cos) = (tau * half).sin_cos();
    let pitch = tau * d / 2.0;
    DualQuaternionPose {
        real: Quaternion::from_parts(cos, l * sin),
        dual: Quaternion::from_parts(-pitch * sin, m * sin + l * (pitch * cos)),
    }
}

/// Screw linear interpolation `a (a^-1 b)^t`.
///
/// `b` is sign-aligned with `a` first, so the shorter screw motion is used.
pub fn sclerp(a: &DualQuaternionPose, b: &DualQuaternionPose, t: f64) -> Result<DualQuaternionPose> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange {
            value: t,
            min: 0.0,
            max: 1.0,
        });
    }
    a.validate()?;
    b.validate()?;
    if t == 0.0 {
        return Ok(a.canonical());
    }
    if t == 1.0 {
        return Ok(b.canonical());
    }
    let diff = (a.conjugate() * *b).canonical();
    Ok((*a * power(&diff, t)).normalize().canonical())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_from_rpy;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn pose(rpy: [f64; 3], t: [f64; 3]) -> DualQuaternionPose {
        let ext = StereoExtrinsics::new(
            rotation_from_rpy(rpy[0], rpy[1], rpy[2]),
            Vector3::from(t),
        )
        .unwrap();
        pose_to_dual_quaternion(&ext).unwrap()
    }

    #[test]
    fn identity_pose() {
        let dq = DualQuaternionPose::from_rotation_translation(UnitQuaternion::identity(), Vector3::zeros());
        assert_eq!(dq, DualQuaternionPose::IDENTITY);
    }

    #[test]
    fn pure_translation() {
        let dq = pose([0.0; 3], [0.1, 0.0, 0.0]);
        assert_eq!(dq.real, Quaternion::identity());
        let expected = Quaternion::new(0.0, 0.1, 0.0, 0.0) * dq.real * 0.5;
        assert_abs_diff_eq!(dq.dual, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(dq.dual, Quaternion::new(0.0, 0.05, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn round_trip() {
        let ext = StereoExtrinsics::new(
            rotation_from_rpy(0.3, -0.2, 2.9),
            Vector3::new(0.2, -0.01, 0.03),
        )
        .unwrap();
        let dq = pose_to_dual_quaternion(&ext).unwrap();
        assert!(dq.real.w >= 0.0);
        let back = dual_quaternion_to_pose(&dq).unwrap();
        assert!((back.rotation - ext.rotation).norm() < 1e-9);
        assert!((back.translation - ext.translation).norm() < 1e-9);
    }

    #[test]
    fn rejects_bad_rotation() {
        let mut ext = StereoExtrinsics::horizontal(0.1);
        ext.rotation[(0, 0)] = 1.1;
        assert!(pose_to_dual_quaternion(&ext).is_err());
    }

    #[test]
    fn endpoints_are_exact() {
        let a = pose([0.1, 0.2, 0.3], [0.1, 0.0, 0.01]);
        let b = pose([-0.1, 0.0, 0.5], [0.3, 0.02, 0.0]);
        assert_eq!(sclerp(&a, &b, 0.0).unwrap(), a);
        assert_eq!(sclerp(&a, &b, 1.0).unwrap(), b);
        assert!(sclerp(&a, &b, 1.5).is_err());
    }

    #[test]
    fn translation_midpoint() {
        let a = pose([0.0; 3], [0.1, 0.0, 0.0]);
        let b = pose([0.0; 3], [0.3, 0.0, 0.0]);
        let m = sclerp(&a, &b, 0.5).unwrap();
        assert_abs_diff_eq!(m.translation(), Vector3::new(0.2, 0.0, 0.0), epsilon = 1e-12);
        assert_abs_diff_eq!(m.real, Quaternion::identity(), epsilon = 1e-12);
    }

    #[test]
    fn rotation_matches_slerp() {
        let a = pose([0.0; 3], [0.1, 0.0, 0.0]);
        let b = DualQuaternionPose::from_rotation_translation(
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), FRAC_PI_2),
            Vector3::new(0.1, 0.0, 0.0),
        );
        let m = sclerp(&a, &b, 0.5).unwrap();
        let oracle = a.rotation().slerp(&b.rotation(), 0.5);
        assert!(m.rotation().angle_to(&oracle) < 1e-12);
        assert_abs_diff_eq!(m.rotation().angle(), FRAC_PI_2 / 2.0, epsilon = 1e-12);
        // the same rotation axis passes through the translation, so it is fixed
        assert_abs_diff_eq!(m.translation(), Vector3::new(0.1, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn screw_follows_circular_arc() {
        // 90 degrees about z through the origin moves (1,0,0) to (0,1,0)
        let a = DualQuaternionPose::from_rotation_translation(UnitQuaternion::identity(), Vector3::x());
        let b = DualQuaternionPose::from_rotation_translation(
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2),
            Vector3::y(),
        );
        let m = sclerp(&a, &b, 0.5).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(m.translation(), Vector3::new(s, s, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn antipodal_sign_is_resolved() {
        let a = pose([0.0, 0.0, 0.2], [0.1, 0.0, 0.0]);
        let b = pose([0.0, 0.0, 0.4], [0.2, 0.0, 0.0]);
        let flipped = DualQuaternionPose {
            real: -b.real,
            dual: -b.dual,
        };
        let m1 = sclerp(&a, &b, 0.3).unwrap();
        let m2 = sclerp(&a, &flipped, 0.3).unwrap();
        assert!(m1.distance(&m2) < 1e-12);
    }

    #[test]
    fn tiny_rotation_uses_linear_fallback() {
        let a = pose([0.0; 3], [0.1, 0.0, 0.0]);
        let b = pose([1e-10, 0.0, 0.0], [0.3, 0.0, 0.0]);
        let m = sclerp(&a, &b, 0.25).unwrap();
        assert!(m.is_unit(1e-12));
        assert_abs_diff_eq!(m.translation().x, 0.15, epsilon = 1e-12);
    }
}
