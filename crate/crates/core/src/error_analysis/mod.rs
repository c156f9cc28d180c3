//! Pixel-error fields caused by miscalibrated intrinsics and extrinsics, the
//! e_y/e_x ratio table, and the stereo synchronization velocity bound.
//!
//! A scalar estimate with percentage error `a_e` is `a~ = a^ (1 + a_e/100)`.
//! Rotation errors are given in degrees and composed as `R~ = R^ R_e` with
//! `R_e = Rz(yaw) Ry(pitch) Rx(roll)`.

mod extrinsic;
mod fields;
mod intrinsic;
mod report;
mod sync;
mod table1;

pub use extrinsic::{extrinsic_error_field, perturb_extrinsics};
pub use fields::{ErrorGrid, ErrorSummary, StereoErrorField};
pub use intrinsic::{intrinsic_error_field, perturb_camera, stereo_intrinsic_error_field, UndistortedGrid};
pub use report::{write_sweep_csv, write_sync_csv, write_table1_csv};
pub use sync::{max_velocity_for_sync, sync_sweep, SyncRow};
pub use table1::{
    parameter_sweep, table1_report, Expectation, RatioCheck, RatioKind, SweepRow, Table1Report,
    Table1Setup,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    /// Focal length (both `fx` and `fy`).
    F,
    Alpha,
    K1,
    K2,
    K3,
    K4,
    K5,
    Tx,
    Ty,
    Tz,
    Roll,
    Pitch,
    Yaw,
}

impl Parameter {
    pub const INTRINSIC: [Parameter; 7] = [
        Parameter::F,
        Parameter::Alpha,
        Parameter::K1,
        Parameter::K2,
        Parameter::K3,
        Parameter::K4,
        Parameter::K5,
    ];

    pub const EXTRINSIC: [Parameter; 6] = [
        Parameter::Tx,
        Parameter::Ty,
        Parameter::Tz,
        Parameter::Roll,
        Parameter::Pitch,
        Parameter::Yaw,
    ];

    pub fn is_intrinsic(self) -> bool {
        Self::INTRINSIC.contains(&self)
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, Parameter::Roll | Parameter::Pitch | Parameter::Yaw)
    }

    pub fn name(self) -> &'static str {
        match self {
            Parameter::F => "f",
            Parameter::Alpha => "alpha",
            Parameter::K1 => "k1",
            Parameter::K2 => "k2",
            Parameter::K3 => "k3",
            Parameter::K4 => "k4",
            Parameter::K5 => "k5",
            Parameter::Tx => "tx",
            Parameter::Ty => "ty",
            Parameter::Tz => "tz",
            Parameter::Roll => "roll",
            Parameter::Pitch => "pitch",
            Parameter::Yaw => "yaw",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Both,
}

/// One parameter error. `magnitude` is a percentage for scalar parameters
/// and degrees for rotations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub parameter: Parameter,
    pub magnitude: f64,
    pub side: Side,
}

impl PerturbationSpec {
    pub fn new(parameter: Parameter, magnitude: f64) -> Result<Self> {
        let spec = Self {
            parameter,
            magnitude,
            side: Side::Both,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.magnitude.is_finite() {
            return Err(Error::invalid("perturbation magnitude must be finite"));
        }
        let limit = if self.parameter.is_rotation() { 10.0 } else { 100.0 };
        if self.magnitude.abs() > limit {
            return Err(Error::OutOfRange {
                value: self.magnitude,
                min: -limit,
                max: limit,
            });
        }
        Ok(())
    }

    /// `a (1 + magnitude / 100)`.
    pub(crate) fn scale(&self, nominal: f64) -> f64 {
        nominal * (1.0 + self.magnitude / 100.0)
    }
}
