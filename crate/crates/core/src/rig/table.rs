use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dual_quat::{pose_to_dual_quaternion, sclerp, DualQuaternionPose};
use crate::error::{Error, Result};
use crate::geometry::{
    rotation_from_rpy, CameraIntrinsics, CameraModel, DistortionCoefficients, StereoCalibration,
    StereoExtrinsics,
};

/// Allowed relative mismatch between a record's `|T|` and its baseline key.
pub const BASELINE_KEY_TOLERANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub baseline: f64,
    pub left: CameraModel,
    pub right: CameraModel,
    pub extrinsics: StereoExtrinsics,
    pub pose: DualQuaternionPose,
}

impl CalibrationEntry {
    pub fn new(
        baseline: f64,
        left: CameraModel,
        right: CameraModel,
        extrinsics: StereoExtrinsics,
    ) -> Result<Self> {
        if !(baseline.is_finite() && baseline > 0.0) {
            return Err(Error::invalid(format!("baseline must be > 0, got {baseline}")));
        }
        left.intrinsics.validate()?;
        right.intrinsics.validate()?;
        let pose = pose_to_dual_quaternion(&extrinsics)?;
        let norm = extrinsics.baseline();
        if (norm - baseline).abs() > BASELINE_KEY_TOLERANCE * baseline {
            return Err(Error::invalid(format!(
                "translation norm {norm} differs from baseline key {baseline} by more than 1%"
            )));
        }
        Ok(Self {
            baseline,
            left,
            right,
            extrinsics,
            pose,
        })
    }

    pub fn calibration(&self) -> StereoCalibration {
        StereoCalibration {
            baseline: self.baseline,
            left: self.left,
            right: self.right,
            extrinsics: self.extrinsics,
        }
    }
}

/// Per-baseline calibrations, ordered by strictly increasing baseline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationTable {
    entries: Vec<CalibrationEntry>,
}

impl CalibrationTable {
    pub fn new(entries: Vec<CalibrationEntry>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::invalid(format!(
                "calibration table needs at least 2 entries, got {}",
                entries.len()
            )));
        }
        for (i, w) in entries.windows(2).enumerate() {
            if !(w[1].baseline > w[0].baseline) {
                return Err(Error::Record {
                    index: i + 1,
                    message: format!(
                        "baseline {} does not increase past {}",
                        w[1].baseline, w[0].baseline
                    ),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[CalibrationEntry] {
        &self.entries
    }

    pub fn range(&self) -> (f64, f64) {
        (self.entries[0].baseline, self.entries[self.entries.len() - 1].baseline)
    }

    pub fn contains(&self, baseline: f64) -> bool {
        let (lo, hi) = self.range();
        (lo..=hi).contains(&baseline)
    }

    /// Index `i` with `entries[i].baseline <= b <= entries[i + 1].baseline`.
    fn bracket(&self, baseline: f64) -> Result<usize> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&baseline) {
            return Err(Error::OutOfRange {
                value: baseline,
                min: lo,
                max: hi,
            });
        }
        let i = self.entries.partition_point(|e| e.baseline <= baseline);
        Ok(i.saturating_sub(1).min(self.entries.len() - 2))
    }

    /// Extrinsics only, via ScLERP between the bracketing entries.
    pub fn interpolate_pose(&self, baseline: f64) -> Result<DualQuaternionPose> {
        let i = self.bracket(baseline)?;
        let (a, b) = (&self.entries[i], &self.entries[i + 1]);
        sclerp(&a.pose, &b.pose, (baseline - a.baseline) / (b.baseline - a.baseline))
    }

    /// Full calibration at `baseline`. Extrinsics use ScLERP; intrinsics and
    /// distortion are interpolated linearly per coefficient. A stored key
    /// returns its entry unchanged.
    pub fn interpolate(&self, baseline: f64) -> Result<StereoCalibration> {
        let i = self.bracket(baseline)?;
        let (a, b) = (&self.entries[i], &self.entries[i + 1]);
        if baseline == a.baseline {
            return Ok(a.calibration());
        }
        if baseline == b.baseline {
            return Ok(b.calibration());
        }
        let t = (baseline - a.baseline) / (b.baseline - a.baseline);
        let pose = sclerp(&a.pose, &b.pose, t)?;
        Ok(StereoCalibration {
            baseline,
            left: lerp_camera(&a.left, &b.left, t),
            right: lerp_camera(&a.right, &b.right, t),
            extrinsics: super::dual_quaternion_to_pose(&pose)?,
        })
    }

    /// Ideal horizontal rig at each baseline, with a small random rotation
    /// per entry standing in for calibration noise.
    pub fn synthetic<R: Rng + ?Sized>(config: &SyntheticTableConfig, rng: &mut R) -> Result<Self> {
        let jitter = config.rotation_jitter_deg.to_radians();
        let mut angle = || {
            if jitter > 0.0 {
                rng.gen_range(-jitter..=jitter)
            } else {
                0.0
            }
        };
        let entries = config
            .baselines
            .iter()
            .map(|&b| {
                let rotation = rotation_from_rpy(angle(), angle(), angle());
                let extrinsics = StereoExtrinsics::new(rotation, Vector3::new(b, 0.0, 0.0))?;
                CalibrationEntry::new(b, config.camera, config.camera, extrinsics)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticTableConfig {
    pub camera: CameraModel,
    pub baselines: Vec<f64>,
    /// Per-axis bound, degrees.
    pub rotation_jitter_deg: f64,
}

impl SyntheticTableConfig {
    /// Ten equally spaced baselines between 0.1 and 0.3 m.
    pub fn standard(camera: CameraModel, rotation_jitter_deg: f64) -> Self {
        Self {
            camera,
            baselines: equally_spaced(0.1, 0.3, 10),
            rotation_jitter_deg,
        }
    }
}

/// `n` values from `lo` to `hi` inclusive.
pub fn equally_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn lerp_camera(a: &CameraModel, b: &CameraModel, t: f64) -> CameraModel {
    let (ia, ib) = (&a.intrinsics, &b.intrinsics);
    let ka = a.distortion.as_array();
    let kb = b.distortion.as_array();
    CameraModel {
        intrinsics: CameraIntrinsics {
            fx: lerp(ia.fx, ib.fx, t),
            fy: lerp(ia.fy, ib.fy, t),
            cx: lerp(ia.cx, ib.cx, t),
            cy: lerp(ia.cy, ib.cy, t),
            alpha: lerp(ia.alpha, ib.alpha, t),
        },
        distortion: DistortionCoefficients::from_array(std::array::from_fn(|i| {
            lerp(ka[i], kb[i], t)
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ImageSize;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn camera() -> CameraModel {
        CameraModel::pinhole(CameraIntrinsics::centered(100.0, ImageSize::new(128, 128)))
    }

    fn table(jitter: f64) -> CalibrationTable {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        CalibrationTable::synthetic(&SyntheticTableConfig::standard(camera(), jitter), &mut rng).unwrap()
    }

    #[test]
    fn spacing() {
        let b = equally_spaced(0.1, 0.3, 10);
        assert_eq!(b.len(), 10);
        assert_eq!(b[0], 0.1);
        assert_eq!(b[9], 0.3);
        assert!(((b[1] - b[0]) - 0.2 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn stored_key_is_returned_verbatim() {
        let t = table(0.2);
        for e in t.entries() {
            assert_eq!(t.interpolate(e.baseline).unwrap(), e.calibration());
        }
    }

    #[test]
    fn midpoint_of_pure_translations() {
        let t = table(0.0);
        let e = t.entries();
        let mid = (e[3].baseline + e[4].baseline) / 2.0;
        let c = t.interpolate(mid).unwrap();
        assert!((c.extrinsics.baseline() - mid).abs() < 1e-9);
    }

    #[test]
    fn out_of_range() {
        let err = table(0.0).interpolate(0.35).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { min, max, .. } if min == 0.1 && max == 0.3));
    }

    #[test]
    fn invariants() {
        let c = camera();
        let e1 = CalibrationEntry::new(0.1, c, c, StereoExtrinsics::horizontal(0.1)).unwrap();
        let e2 = CalibrationEntry::new(0.2, c, c, StereoExtrinsics::horizontal(0.2)).unwrap();
        assert!(CalibrationTable::new(vec![e1]).is_err());
        assert!(matches!(
            CalibrationTable::new(vec![e2, e1]),
            Err(Error::Record { index: 1, .. })
        ));
        assert!(CalibrationEntry::new(0.1, c, c, StereoExtrinsics::horizontal(0.102)).is_err());
    }

    #[test]
    fn intrinsics_interpolate_linearly() {
        let c1 = camera();
        let mut c2 = camera();
        c2.intrinsics.fx = 110.0;
        c2.distortion.k1 = 0.02;
        let e1 = CalibrationEntry::new(0.1, c1, c1, StereoExtrinsics::horizontal(0.1)).unwrap();
        let e2 = CalibrationEntry::new(0.3, c2, c2, StereoExtrinsics::horizontal(0.3)).unwrap();
        let t = CalibrationTable::new(vec![e1, e2]).unwrap();
        let c = t.interpolate(0.15).unwrap();
        assert!((c.left.intrinsics.fx - 102.5).abs() < 1e-12);
        assert!((c.right.distortion.k1 - 0.005).abs() < 1e-12);
    }
}
