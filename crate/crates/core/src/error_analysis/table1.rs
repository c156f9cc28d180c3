use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use super::intrinsic::{field_from_grid, UndistortedGrid};
use super::{extrinsic_error_field, ErrorSummary, Parameter, PerturbationSpec};
use crate::error::{Error, Result};
use crate::geometry::{
    CameraIntrinsics, CameraModel, DistortionCoefficients, ImageSize, SensorGeometry,
    StereoCalibration, StereoExtrinsics,
};

/// Band for "approximately 1" entries.
pub const APPROX_ONE_BAND: f64 = 0.3;
/// Band for "approximately 2" entries.
pub const APPROX_TWO_BAND: f64 = 0.5;
/// Tolerance for entries that hold exactly.
pub const EXACT_TOLERANCE: f64 = 1e-6;

/// Nominal cameras and rig used to evaluate the ratio table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Setup {
    pub sensor: SensorGeometry,
    pub focal_lengths_mm: Vec<f64>,
    pub alpha: f64,
    pub distortion: DistortionCoefficients,
    pub translation: Vector3<f64>,
    /// Percent, applied to scalar parameters.
    pub scalar_magnitude: f64,
    /// Degrees, applied to rotation parameters.
    pub rotation_magnitude: f64,
}

impl Default for Table1Setup {
    fn default() -> Self {
        Self {
            sensor: SensorGeometry::third_inch_128(),
            focal_lengths_mm: vec![1.5, 2.0, 3.0, 4.0, 8.0, 16.0],
            alpha: 0.001,
            distortion: DistortionCoefficients {
                k1: 0.01,
                k2: 0.001,
                k3: 0.0005,
                k4: 0.0005,
                k5: 0.0001,
            },
            translation: Vector3::new(0.2, 0.004, 0.002),
            scalar_magnitude: 1.0,
            rotation_magnitude: 0.1,
        }
    }
}

impl Table1Setup {
    pub fn image_size(&self) -> ImageSize {
        self.sensor.image
    }

    pub fn camera(&self, focal_mm: f64) -> Result<CameraModel> {
        let f = self.sensor.focal_px(focal_mm);
        let size = self.image_size();
        let intr = CameraIntrinsics::new(
            f,
            f,
            size.width as f64 / 2.0,
            size.height as f64 / 2.0,
            self.alpha,
        )?;
        CameraModel::new(intr, self.distortion)
    }

    pub fn rig(&self, focal_mm: f64) -> Result<StereoCalibration> {
        let camera = self.camera(focal_mm)?;
        let extrinsics = StereoExtrinsics::new(Matrix3::identity(), self.translation)?;
        Ok(StereoCalibration {
            baseline: extrinsics.baseline(),
            left: camera,
            right: camera,
            extrinsics,
        })
    }

    fn spec(&self, parameter: Parameter, magnitude: Option<f64>) -> Result<PerturbationSpec> {
        let m = magnitude.unwrap_or(if parameter.is_rotation() {
            self.rotation_magnitude
        } else {
            self.scalar_magnitude
        });
        PerturbationSpec::new(parameter, m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioKind {
    /// `max e_y / max e_x` in one camera.
    YOverX,
    /// `max e_x,L / max e_x,R`.
    LeftOverRightX,
    /// `max e_y,L / max e_y,R`.
    LeftOverRightY,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expectation {
    Approx { target: f64, band: f64 },
    Exact { target: f64, tolerance: f64 },
}

impl Expectation {
    pub fn approx_one() -> Self {
        Expectation::Approx {
            target: 1.0,
            band: APPROX_ONE_BAND,
        }
    }

    pub fn approx_two() -> Self {
        Expectation::Approx {
            target: 2.0,
            band: APPROX_TWO_BAND,
        }
    }

    pub fn exact(target: f64) -> Self {
        Expectation::Exact {
            target,
            tolerance: EXACT_TOLERANCE,
        }
    }

    pub fn target(&self) -> f64 {
        match *self {
            Expectation::Approx { target, .. } | Expectation::Exact { target, .. } => target,
        }
    }

    pub fn tolerance(&self) -> f64 {
        match *self {
            Expectation::Approx { band, .. } => band,
            Expectation::Exact { tolerance, .. } => tolerance,
        }
    }

    pub fn accepts(&self, value: f64) -> bool {
        (value - self.target()).abs() <= self.tolerance()
    }

    /// Table entry as written, e.g. `~1` or `0`.
    pub fn label(&self) -> String {
        match self {
            Expectation::Approx { target, .. } => format!("~{target}"),
            Expectation::Exact { target, .. } => format!("{target}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioCheck {
    pub focal_length_mm: f64,
    pub parameter: Parameter,
    pub kind: RatioKind,
    pub value: f64,
    pub expectation: Expectation,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Report {
    pub setup: Table1Setup,
    pub rotation_convention: &'static str,
    pub checks: Vec<RatioCheck>,
}

impl Table1Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RatioCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn for_parameter(&self, parameter: Parameter) -> impl Iterator<Item = &RatioCheck> {
        self.checks.iter().filter(move |c| c.parameter == parameter)
    }
}

fn intrinsic_expectation(p: Parameter) -> Option<Expectation> {
    match p {
        Parameter::F | Parameter::K1 | Parameter::K2 | Parameter::K5 => {
            Some(Expectation::approx_one())
        }
        Parameter::Alpha => Some(Expectation::exact(0.0)),
        Parameter::K3 => Some(Expectation::approx_two()),
        _ => None,
    }
}

fn extrinsic_expectation(p: Parameter) -> Expectation {
    if p.is_rotation() {
        Expectation::exact(0.0)
    } else {
        Expectation::exact(1.0)
    }
}

fn check(
    focal_length_mm: f64,
    parameter: Parameter,
    kind: RatioKind,
    value: f64,
    expectation: Expectation,
) -> RatioCheck {
    RatioCheck {
        focal_length_mm,
        parameter,
        kind,
        value,
        expectation,
        pass: expectation.accepts(value),
    }
}

fn checks_for_focal(setup: &Table1Setup, focal_mm: f64) -> Result<Vec<RatioCheck>> {
    let size = setup.image_size();
    let camera = setup.camera(focal_mm)?;
    let grid = UndistortedGrid::new(&camera, size)?;
    let mut out = Vec::new();
    for p in Parameter::INTRINSIC {
        let Some(expectation) = intrinsic_expectation(p) else {
            continue;
        };
        let s = field_from_grid(&setup.spec(p, None)?, &camera, &grid)?.summary();
        out.push(check(focal_mm, p, RatioKind::YOverX, s.ratio, expectation));
    }
    let rig = setup.rig(focal_mm)?;
    for p in Parameter::EXTRINSIC {
        let field = extrinsic_error_field(&setup.spec(p, None)?, &rig, size)?;
        let (rx, ry) = field.left_right_ratios();
        let expectation = extrinsic_expectation(p);
        out.push(check(focal_mm, p, RatioKind::LeftOverRightX, rx, expectation));
        out.push(check(focal_mm, p, RatioKind::LeftOverRightY, ry, expectation));
    }
    Ok(out)
}

/// Evaluates every ratio entry of the e_x/e_y relationship table for each
/// focal length of the setup.
pub fn table1_report(setup: &Table1Setup) -> Result<Table1Report> {
    if setup.focal_lengths_mm.is_empty() {
        return Err(Error::invalid("focal length list is empty"));
    }
    let per_focal = setup
        .focal_lengths_mm
        .par_iter()
        .map(|&f| checks_for_focal(setup, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(Table1Report {
        setup: setup.clone(),
        rotation_convention: "R~ = R * Rz(yaw) * Ry(pitch) * Rx(roll)",
        checks: per_focal.into_iter().flatten().collect(),
    })
}

/// One row of a magnitude sweep. Extrinsic sweeps report the right camera.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub magnitude: f64,
    pub e_x_max: f64,
    pub e_y_max: f64,
    pub e_x_mean: f64,
    pub e_y_mean: f64,
}

impl SweepRow {
    fn new(magnitude: f64, s: ErrorSummary) -> Self {
        Self {
            magnitude,
            e_x_max: s.ex_max,
            e_y_max: s.ey_max,
            e_x_mean: s.ex_mean,
            e_y_mean: s.ey_mean,
        }
    }
}

pub fn parameter_sweep(
    setup: &Table1Setup,
    parameter: Parameter,
    focal_mm: f64,
    magnitudes: &[f64],
) -> Result<Vec<SweepRow>> {
    let size = setup.image_size();
    if parameter.is_intrinsic() {
        let camera = setup.camera(focal_mm)?;
        let grid = UndistortedGrid::new(&camera, size)?;
        magnitudes
            .iter()
            .map(|&m| {
                let s = field_from_grid(&setup.spec(parameter, Some(m))?, &camera, &grid)?;
                Ok(SweepRow::new(m, s.summary()))
            })
            .collect()
    } else {
        let rig = setup.rig(focal_mm)?;
        magnitudes
            .iter()
            .map(|&m| {
                let f = extrinsic_error_field(&setup.spec(parameter, Some(m))?, &rig, size)?;
                Ok(SweepRow::new(m, f.right.summary()))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_setup_reproduces_table() {
        let report = table1_report(&Table1Setup::default()).unwrap();
        assert_eq!(report.checks.len(), 6 * (6 + 12));
        let failures: Vec<_> = report.failures().collect();
        assert!(failures.is_empty(), "{failures:#?}");
    }

    #[test]
    fn empty_focal_list_is_rejected() {
        let setup = Table1Setup {
            focal_lengths_mm: vec![],
            ..Table1Setup::default()
        };
        assert!(table1_report(&setup).is_err());
    }

    #[test]
    fn sweep_grows_with_magnitude() {
        let setup = Table1Setup::default();
        let rows = parameter_sweep(&setup, Parameter::K1, 4.0, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(rows[0].e_x_max, 0.0);
        assert!(rows[2].e_x_max > rows[1].e_x_max);
        let rows = parameter_sweep(&setup, Parameter::Yaw, 4.0, &[0.05, 0.1]).unwrap();
        assert!(rows[1].e_x_max > rows[0].e_x_max);
    }

    #[test]
    fn expectation_labels() {
        assert_eq!(Expectation::approx_two().label(), "~2");
        assert_eq!(Expectation::exact(0.0).label(), "0");
        assert!(Expectation::approx_one().accepts(1.29));
        assert!(!Expectation::approx_one().accepts(1.31));
    }
}
