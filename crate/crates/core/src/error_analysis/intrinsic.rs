use nalgebra::Vector2;
use rayon::prelude::*;

use super::{ErrorGrid, Parameter, PerturbationSpec, Side, StereoErrorField};
use crate::error::{Error, PixelRef, Result};
use crate::geometry::{CameraModel, ImageSize};

/// Normalized coordinates of every integer pixel under the nominal model.
#[derive(Clone, Debug)]
pub struct UndistortedGrid {
    size: ImageSize,
    points: Vec<Vector2<f64>>,
}

impl UndistortedGrid {
    pub fn new(camera: &CameraModel, size: ImageSize) -> Result<Self> {
        let points = (0..size.pixel_count())
            .into_par_iter()
            .map(|i| {
                let p = Vector2::new((i % size.width) as f64, (i / size.width) as f64);
                camera.undistort(p)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { size, points })
    }

    pub fn size(&self) -> ImageSize {
        self.size
    }

    pub fn points(&self) -> &[Vector2<f64>] {
        &self.points
    }
}

pub fn perturb_camera(camera: &CameraModel, spec: &PerturbationSpec) -> Result<CameraModel> {
    spec.validate()?;
    let mut out = *camera;
    let intr = &mut out.intrinsics;
    let dist = &mut out.distortion;
    match spec.parameter {
        Parameter::F => {
            intr.fx = spec.scale(intr.fx);
            intr.fy = spec.scale(intr.fy);
        }
        Parameter::Alpha => intr.alpha = spec.scale(intr.alpha),
        Parameter::K1 => dist.k1 = spec.scale(dist.k1),
        Parameter::K2 => dist.k2 = spec.scale(dist.k2),
        Parameter::K3 => dist.k3 = spec.scale(dist.k3),
        Parameter::K4 => dist.k4 = spec.scale(dist.k4),
        Parameter::K5 => dist.k5 = spec.scale(dist.k5),
        p => {
            return Err(Error::invalid(format!(
                "{} is not an intrinsic parameter",
                p.name()
            )))
        }
    }
    Ok(out)
}

/// Pixel displacement caused by processing with a perturbed intrinsic estimate.
///
/// Each integer pixel is traced back to its normalized point `x` under the
/// nominal model; the field holds `|x~ - x^|` per coordinate, where `x^` and
/// `x~` project `x` with the nominal and the perturbed model.
pub fn intrinsic_error_field(
    spec: &PerturbationSpec,
    camera: &CameraModel,
    size: ImageSize,
) -> Result<ErrorGrid> {
    let grid = UndistortedGrid::new(camera, size)?;
    field_from_grid(spec, camera, &grid)
}

pub(crate) fn field_from_grid(
    spec: &PerturbationSpec,
    camera: &CameraModel,
    grid: &UndistortedGrid,
) -> Result<ErrorGrid> {
    let perturbed = perturb_camera(camera, spec)?;
    let size = grid.size;
    let errors = grid
        .points
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let pixel = Vector2::new((i % size.width) as f64, (i / size.width) as f64);
            let det = perturbed.distortion.jacobian(*x).determinant();
            if !(det > 0.0) {
                return Err(Error::NonInvertible {
                    pixel: PixelRef::from(pixel),
                    determinant: det,
                });
            }
            let d = perturbed.project(*x)? - camera.project(*x)?;
            Ok((d.x.abs(), d.y.abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (ex, ey) = errors.into_iter().unzip();
    Ok(ErrorGrid { size, ex, ey })
}

/// Applies the perturbation to the camera(s) named by `spec.side`; an
/// unperturbed side gets an all-zero field.
pub fn stereo_intrinsic_error_field(
    spec: &PerturbationSpec,
    left: &CameraModel,
    right: &CameraModel,
    size: ImageSize,
) -> Result<StereoErrorField> {
    let field = |camera: &CameraModel, active: bool| {
        if active {
            intrinsic_error_field(spec, camera, size)
        } else {
            Ok(ErrorGrid::zeros(size))
        }
    };
    Ok(StereoErrorField {
        left: field(left, spec.side != Side::Right)?,
        right: field(right, spec.side != Side::Left)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CameraIntrinsics, DistortionCoefficients};

    const SIZE: ImageSize = ImageSize::new(128, 128);

    fn camera(alpha: f64, k3: f64, k4: f64) -> CameraModel {
        let intr = CameraIntrinsics::new(90.0, 90.0, 64.0, 64.0, alpha).unwrap();
        let dist = DistortionCoefficients::new(0.01, 0.001, k3, k4, 0.0001).unwrap();
        CameraModel::new(intr, dist).unwrap()
    }

    fn spec(p: Parameter, m: f64) -> PerturbationSpec {
        PerturbationSpec::new(p, m).unwrap()
    }

    #[test]
    fn zero_magnitude_gives_zero_field() {
        let cam = camera(0.001, 0.0005, 0.0005);
        for p in Parameter::INTRINSIC {
            let g = intrinsic_error_field(&spec(p, 0.0), &cam, SIZE).unwrap();
            assert!(g.summary().ex_max < 1e-9, "{p:?}");
            assert!(g.summary().ey_max < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn skew_error_is_horizontal_only() {
        let cam = camera(0.001, 0.0005, 0.0005);
        let g = intrinsic_error_field(&spec(Parameter::Alpha, 5.0), &cam, SIZE).unwrap();
        assert!(g.summary().ex_max > 0.0);
        assert!(g.ey.iter().all(|e| *e < 1e-9));
    }

    #[test]
    fn tangential_fields_are_transposes() {
        let cam = camera(0.0, 0.0005, 0.0005);
        let g3 = intrinsic_error_field(&spec(Parameter::K3, 1.0), &cam, SIZE).unwrap();
        let g4 = intrinsic_error_field(&spec(Parameter::K4, 1.0), &cam, SIZE).unwrap();
        let t = g3.transposed();
        for i in 0..g4.ex.len() {
            assert!((t.ex[i] - g4.ex[i]).abs() < 1e-9);
            assert!((t.ey[i] - g4.ey[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn halving_magnitude_halves_error() {
        let cam = camera(0.001, 0.0005, 0.0005);
        for p in Parameter::INTRINSIC {
            let a = intrinsic_error_field(&spec(p, 1.0), &cam, SIZE).unwrap().summary();
            let b = intrinsic_error_field(&spec(p, 0.5), &cam, SIZE).unwrap().summary();
            let r = b.ex_max.max(b.ey_max) / a.ex_max.max(a.ey_max);
            assert!((0.4..=0.6).contains(&r), "{p:?} {r}");
        }
    }

    #[test]
    fn folding_perturbation_is_reported() {
        let cam = camera(0.001, 0.0005, 0.0005);
        let mut strong = cam;
        strong.distortion.k1 = -0.12;
        let folded = intrinsic_error_field(&spec(Parameter::K1, 100.0), &strong, SIZE);
        assert!(matches!(folded, Err(Error::NonInvertible { .. })), "{folded:?}");
    }

    #[test]
    fn rejects_extrinsic_parameter() {
        let cam = camera(0.001, 0.0005, 0.0005);
        assert!(intrinsic_error_field(&spec(Parameter::Tx, 1.0), &cam, SIZE).is_err());
    }
}
