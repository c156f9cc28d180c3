//! Pinhole intrinsics with skew and the five-coefficient radial-tangential
//! lens model.
//!
//! Normalized coordinates `x = (X/Z, Y/Z)` are mapped to pixels in two steps:
//!
//! ```text
//! x_r = (1 + k1 r^2 + k2 r^4 + k5 r^6) x + [2 k3 x y + k4 (r^2 + 2 x^2)]
//!                                           [k3 (r^2 + 2 y^2) + 2 k4 x y]
//! x_t = [fx (x_r + alpha y_r) + cx,  fy y_r + cy]
//! ```
//!
//! `k3` and `k4` are the tangential terms. Skew couples only the x pixel
//! coordinate, which is what makes skew errors invisible along y.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, PixelRef, Result};

/// Default half-width of the square normalized-coordinate domain.
pub const DEFAULT_DOMAIN: f64 = 1.5;

/// Iteration budget for [`undistort`].
pub const UNDISTORT_MAX_ITERATIONS: usize = 50;

/// Convergence tolerance of [`undistort`], in normalized coordinates.
pub const UNDISTORT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: usize,
    pub height: usize,
}

impl ImageSize {
    pub const fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
    }
}

/// Physical sensor used to convert lens focal lengths (mm) into pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorGeometry {
    /// Sensor width in millimetres (square pixels assumed).
    pub width_mm: f64,
    pub image: ImageSize,
}

impl SensorGeometry {
    /// 1/3" square sensor sampled at 128x128 px.
    pub const fn third_inch_128() -> Self {
        Self {
            width_mm: 4.24,
            image: ImageSize::new(128, 128),
        }
    }

    pub fn pixel_pitch_mm(&self) -> f64 {
        self.width_mm / self.image.width as f64
    }

    pub fn focal_px(&self, focal_mm: f64) -> f64 {
        focal_mm / self.pixel_pitch_mm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Focal length along x, pixels.
    pub fx: f64,
    /// Focal length along y, pixels.
    pub fy: f64,
    /// Principal point, pixels.
    pub cx: f64,
    pub cy: f64,
    /// Dimensionless skew.
    pub alpha: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, alpha: f64) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            alpha,
        };
        intr.validate()?;
        Ok(intr)
    }

    /// Square-pixel camera with the principal point at the image centre.
    pub fn centered(focal_px: f64, size: ImageSize) -> Self {
        Self {
            fx: focal_px,
            fy: focal_px,
            cx: size.width as f64 / 2.0,
            cy: size.height as f64 / 2.0,
            alpha: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("fx", self.fx)?;
        ensure_positive("fy", self.fy)?;
        ensure_finite("cx", self.cx)?;
        ensure_finite("cy", self.cy)?;
        ensure_finite("alpha", self.alpha)
    }

    /// Checks that the principal point lies within `margin` pixels of the image.
    pub fn validate_principal_point(&self, size: ImageSize, margin: f64) -> Result<()> {
        let (w, h) = (size.width as f64, size.height as f64);
        if self.cx < -margin || self.cx > w + margin || self.cy < -margin || self.cy > h + margin {
            return Err(Error::invalid(format!(
                "principal point ({}, {}) outside {}x{} image with margin {}",
                self.cx, self.cy, size.width, size.height, margin
            )));
        }
        Ok(())
    }

    /// `K` with the skew entry `alpha * fx`.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.fx,
            self.alpha * self.fx,
            self.cx,
            0.0,
            self.fy,
            self.cy,
            0.0,
            0.0,
            1.0,
        )
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        let (fx, fy, cx, cy, a) = (self.fx, self.fy, self.cx, self.cy, self.alpha);
        Matrix3::new(
            1.0 / fx,
            -a / fy,
            a * cy / fy - cx / fx,
            0.0,
            1.0 / fy,
            -cy / fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Applies the pixel mapping of a distorted normalized point.
    pub fn to_pixel(&self, distorted: Vector2<f64>) -> Vector2<f64> {
        Vector2::new(
            self.fx * (distorted.x + self.alpha * distorted.y) + self.cx,
            self.fy * distorted.y + self.cy,
        )
    }

    /// Inverse of [`CameraIntrinsics::to_pixel`].
    pub fn to_distorted(&self, pixel: Vector2<f64>) -> Vector2<f64> {
        let yr = (pixel.y - self.cy) / self.fy;
        let xr = (pixel.x - self.cx) / self.fx - self.alpha * yr;
        Vector2::new(xr, yr)
    }
}

/// Radial (`k1`, `k2`, `k5`) and tangential (`k3`, `k4`) coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistortionCoefficients {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
}

impl DistortionCoefficients {
    pub const NONE: Self = Self {
        k1: 0.0,
        k2: 0.0,
        k3: 0.0,
        k4: 0.0,
        k5: 0.0,
    };

    /// Builds and validates over the default normalized domain.
    pub fn new(k1: f64, k2: f64, k3: f64, k4: f64, k5: f64) -> Result<Self> {
        let d = Self { k1, k2, k3, k4, k5 };
        d.validate(DEFAULT_DOMAIN)?;
        Ok(d)
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.k1, self.k2, self.k3, self.k4, self.k5]
    }

    pub fn from_array(k: [f64; 5]) -> Self {
        Self {
            k1: k[0],
            k2: k[1],
            k3: k[2],
            k4: k[3],
            k5: k[4],
        }
    }

    /// Forward lens map on a normalized point.
    pub fn distort(&self, p: Vector2<f64>) -> Vector2<f64> {
        let (x, y) = (p.x, p.y);
        let r2 = x * x + y * y;
        let radial = 1.0 + self.k1 * r2 + self.k2 * r2 * r2 + self.k5 * r2 * r2 * r2;
        let tx = 2.0 * self.k3 * x * y + self.k4 * (r2 + 2.0 * x * x);
        let ty = self.k3 * (r2 + 2.0 * y * y) + 2.0 * self.k4 * x * y;
        Vector2::new(radial * x + tx, radial * y + ty)
    }

    pub fn jacobian(&self, p: Vector2<f64>) -> Matrix2<f64> {
        let (x, y) = (p.x, p.y);
        let r2 = x * x + y * y;
        let radial = 1.0 + self.k1 * r2 + self.k2 * r2 * r2 + self.k5 * r2 * r2 * r2;
        // d(radial)/d(r2)
        let dradial = self.k1 + 2.0 * self.k2 * r2 + 3.0 * self.k5 * r2 * r2;
        let (k3, k4) = (self.k3, self.k4);
        let dxdx = radial + 2.0 * x * x * dradial + 2.0 * k3 * y + 6.0 * k4 * x;
        let dxdy = 2.0 * x * y * dradial + 2.0 * k3 * x + 2.0 * k4 * y;
        let dydx = 2.0 * x * y * dradial + 2.0 * k3 * x + 2.0 * k4 * y;
        let dydy = radial + 2.0 * y * y * dradial + 6.0 * k3 * y + 2.0 * k4 * x;
        Matrix2::new(dxdx, dxdy, dydx, dydy)
    }

    /// Checks finiteness and that the Jacobian stays orientation-preserving
    /// on a 33x33 sample grid over `[-domain, domain]^2`.
    pub fn validate(&self, domain: f64) -> Result<()> {
        for (name, k) in ["k1", "k2", "k3", "k4", "k5"].iter().zip(self.as_array()) {
            ensure_finite(name, k)?;
        }
        const N: usize = 33;
        for i in 0..N {
            for j in 0..N {
                let x = -domain + 2.0 * domain * i as f64 / (N - 1) as f64;
                let y = -domain + 2.0 * domain * j as f64 / (N - 1) as f64;
                let det = self.jacobian(Vector2::new(x, y)).determinant();
                if !(det > 0.0) {
                    return Err(Error::invalid(format!(
                        "distortion map folds over near normalized point ({x:.3}, {y:.3}), det = {det:e}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Intrinsics plus lens model for one camera.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub intrinsics: CameraIntrinsics,
    pub distortion: DistortionCoefficients,
}

impl CameraModel {
    pub fn new(intrinsics: CameraIntrinsics, distortion: DistortionCoefficients) -> Result<Self> {
        intrinsics.validate()?;
        distortion.validate(DEFAULT_DOMAIN)?;
        Ok(Self {
            intrinsics,
            distortion,
        })
    }

    pub fn pinhole(intrinsics: CameraIntrinsics) -> Self {
        Self {
            intrinsics,
            distortion: DistortionCoefficients::NONE,
        }
    }

    pub fn project(&self, point: Vector2<f64>) -> Result<Vector2<f64>> {
        project_with_distortion(point, &self.distortion, &self.intrinsics)
    }

    pub fn undistort(&self, pixel: Vector2<f64>) -> Result<Vector2<f64>> {
        undistort(pixel, &self.distortion, &self.intrinsics)
    }

    /// Viewing ray `(x, y, 1)` through a pixel in the camera frame.
    pub fn ray(&self, pixel: Vector2<f64>) -> Result<Vector3<f64>> {
        let n = self.undistort(pixel)?;
        Ok(Vector3::new(n.x, n.y, 1.0))
    }

    /// Projects a camera-frame 3D point; `None` behind the camera or outside
    /// the normalized domain.
    pub fn project_point(&self, p: &Vector3<f64>) -> Option<Vector2<f64>> {
        if p.z <= 0.0 {
            return None;
        }
        self.project(Vector2::new(p.x / p.z, p.y / p.z)).ok()
    }
}

/// Maps a normalized point through the lens model and intrinsics.
pub fn project_with_distortion(
    point: Vector2<f64>,
    dist: &DistortionCoefficients,
    intr: &CameraIntrinsics,
) -> Result<Vector2<f64>> {
    if !point.x.is_finite() || !point.y.is_finite() {
        return Err(Error::invalid(format!(
            "non-finite normalized point ({}, {})",
            point.x, point.y
        )));
    }
    if point.x.abs() > DEFAULT_DOMAIN || point.y.abs() > DEFAULT_DOMAIN {
        return Err(Error::invalid(format!(
            "normalized point ({}, {}) outside |x|,|y| <= {DEFAULT_DOMAIN}",
            point.x, point.y
        )));
    }
    Ok(intr.to_pixel(dist.distort(point)))
}

/// Inverts [`project_with_distortion`] by damped Newton iteration on the
/// forward-map residual.
pub fn undistort(
    pixel: Vector2<f64>,
    dist: &DistortionCoefficients,
    intr: &CameraIntrinsics,
) -> Result<Vector2<f64>> {
    if !pixel.x.is_finite() || !pixel.y.is_finite() {
        return Err(Error::invalid(format!(
            "non-finite pixel ({}, {})",
            pixel.x, pixel.y
        )));
    }
    let target = intr.to_distorted(pixel);
    let mut x = target;
    let mut residual = dist.distort(x) - target;
    let mut norm = residual.amax();
    for _ in 0..UNDISTORT_MAX_ITERATIONS {
        if norm < UNDISTORT_TOLERANCE {
            return Ok(x);
        }
        let Some(inv) = dist.jacobian(x).try_inverse() else {
            break;
        };
        let step = inv * residual;
        let mut scale = 1.0;
        loop {
            let candidate = x - step * scale;
            let r = dist.distort(candidate) - target;
            if r.amax() < norm || scale < 1e-6 {
                x = candidate;
                residual = r;
                norm = r.amax();
                break;
            }
            scale *= 0.5;
        }
    }
    if norm < UNDISTORT_TOLERANCE {
        return Ok(x);
    }
    Err(Error::Convergence {
        pixel: PixelRef::from(pixel),
        iterations: UNDISTORT_MAX_ITERATIONS,
        residual: norm,
    })
}

/// Per-pixel viewing rays, computed once per camera.
#[derive(Clone, Debug)]
pub struct RayGrid {
    size: ImageSize,
    rays: Vec<Vector3<f64>>,
}

impl RayGrid {
    pub fn new(camera: &CameraModel, size: ImageSize) -> Result<Self> {
        let mut rays = Vec::with_capacity(size.pixel_count());
        for v in 0..size.height {
            for u in 0..size.width {
                rays.push(camera.ray(Vector2::new(u as f64, v as f64))?);
            }
        }
        Ok(Self { size, rays })
    }

    pub fn size(&self) -> ImageSize {
        self.size
    }

    pub fn ray(&self, u: usize, v: usize) -> Vector3<f64> {
        self.rays[v * self.size.width + u]
    }

    pub fn rays(&self) -> &[Vector3<f64>] {
        &self.rays
    }
}
