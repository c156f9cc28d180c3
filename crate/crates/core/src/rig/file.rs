//! Rig description files.
//!
//! ```toml
//! [image]           # optional, pixels
//! width = 128
//! height = 128
//!
//! [actuator]        # optional; metres, relative noise
//! min = 0.1
//! max = 0.3
//! noise = 0.007
//!
//! [[record]]
//! baseline = 0.1                     # metres
//! translation = [0.1, 0.0, 0.0]      # metres, right centre in left frame
//! rotation_rpy_deg = [0.0, 0.0, 0.0] # degrees, R = Rz(yaw) Ry(pitch) Rx(roll)
//! left = { fx = 100.0, fy = 100.0, cx = 64.0, cy = 64.0 }   # pixels
//! right = { fx = 100.0, fy = 100.0, cx = 64.0, cy = 64.0, distortion = [0.01, 0.0, 0.0, 0.0, 0.0] }
//! ```
//!
//! `alpha` defaults to 0 and `distortion` (`k1..k5`) to all zeros.

use std::path::Path;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::actuator::ActuatorModel;
use super::table::{CalibrationEntry, CalibrationTable};
use crate::error::{Error, Result};
use crate::geometry::{
    rotation_from_rpy, CameraIntrinsics, CameraModel, DistortionCoefficients, ImageSize,
    StereoExtrinsics,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    image: Option<ImageSize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    actuator: Option<RawActuator>,
    record: Vec<RawRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActuator {
    min: f64,
    max: f64,
    noise: f64,
    #[serde(default = "default_samples")]
    samples_per_command: usize,
}

fn default_samples() -> usize {
    10
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    baseline: f64,
    translation: [f64; 3],
    #[serde(default)]
    rotation_rpy_deg: [f64; 3],
    left: RawCamera,
    right: RawCamera,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCamera {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    #[serde(default)]
    alpha: f64,
    #[serde(default)]
    distortion: [f64; 5],
}

impl RawCamera {
    fn build(&self) -> Result<CameraModel> {
        let intr = CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy, self.alpha)?;
        CameraModel::new(intr, DistortionCoefficients::new(
            self.distortion[0],
            self.distortion[1],
            self.distortion[2],
            self.distortion[3],
            self.distortion[4],
        )?)
    }

    fn from_model(m: &CameraModel) -> Self {
        let i = &m.intrinsics;
        Self {
            fx: i.fx,
            fy: i.fy,
            cx: i.cx,
            cy: i.cy,
            alpha: i.alpha,
            distortion: m.distortion.as_array(),
        }
    }
}

impl RawRecord {
    fn build(&self, size: Option<ImageSize>) -> Result<CalibrationEntry> {
        let left = self.left.build().map_err(|e| prefix("left", e))?;
        let right = self.right.build().map_err(|e| prefix("right", e))?;
        if let Some(size) = size {
            left.intrinsics.validate_principal_point(size, 0.0)?;
            right.intrinsics.validate_principal_point(size, 0.0)?;
        }
        let [r, p, y] = self.rotation_rpy_deg.map(f64::to_radians);
        let extrinsics =
            StereoExtrinsics::new(rotation_from_rpy(r, p, y), Vector3::from(self.translation))?;
        CalibrationEntry::new(self.baseline, left, right, extrinsics)
    }
}

fn prefix(side: &str, e: Error) -> Error {
    Error::invalid(format!("{side} camera: {e}"))
}

/// A parsed rig file.
#[derive(Clone, Debug, PartialEq)]
pub struct RigFile {
    pub image: Option<ImageSize>,
    pub actuator: Option<ActuatorModel>,
    pub table: CalibrationTable,
}

/// Parses and validates a rig file, reporting the first invalid record.
pub fn parse_rig_file(text: &str) -> Result<RigFile> {
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let entries = raw
        .record
        .iter()
        .enumerate()
        .map(|(index, r)| {
            r.build(raw.image).map_err(|e| Error::Record {
                index,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let table = CalibrationTable::new(entries)?;
    let actuator = match raw.actuator {
        Some(a) => {
            let model = ActuatorModel {
                min: a.min,
                max: a.max,
                noise: a.noise,
                samples_per_command: a.samples_per_command,
            };
            model.validate()?;
            model.validate_against(&table)?;
            Some(model)
        }
        None => None,
    };
    Ok(RigFile {
        image: raw.image,
        actuator,
        table,
    })
}

pub fn load_rig_file(path: impl AsRef<Path>) -> Result<RigFile> {
    parse_rig_file(&std::fs::read_to_string(path)?)
}

pub fn rig_file_string(rig: &RigFile) -> Result<String> {
    let raw = RawFile {
        image: rig.image,
        actuator: rig.actuator.map(|a| RawActuator {
            min: a.min,
            max: a.max,
            noise: a.noise,
            samples_per_command: a.samples_per_command,
        }),
        record: rig
            .table
            .entries()
            .iter()
            .map(|e| {
                let (r, p, y) = Rotation3::from_matrix_unchecked(e.extrinsics.rotation).euler_angles();
                RawRecord {
                    baseline: e.baseline,
                    translation: e.extrinsics.translation.into(),
                    rotation_rpy_deg: [r, p, y].map(f64::to_degrees),
                    left: RawCamera::from_model(&e.left),
                    right: RawCamera::from_model(&e.right),
                }
            })
            .collect(),
    };
    toml::to_string(&raw).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_rig_file(path: impl AsRef<Path>, rig: &RigFile) -> Result<()> {
    std::fs::write(path, rig_file_string(rig)?)?;
    Ok(())
}
