use std::marker::PhantomData;

use super::camera::ImageSize;
use crate::error::{ensure_positive, Error, Result};

/// Unit marker for [`DenseImage`].
pub trait Unit: Copy + Default + std::fmt::Debug + Send + Sync + 'static {
    /// Short unit name used in file headers.
    const NAME: &'static str;
    /// Image kind used in file headers.
    const KIND: &'static str;
    /// Whether zero is an admissible valid value.
    const ALLOW_ZERO: bool;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Meters;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pixels;

impl Unit for Meters {
    const NAME: &'static str = "m";
    const KIND: &'static str = "depth";
    const ALLOW_ZERO: bool = false;
}

impl Unit for Pixels {
    const NAME: &'static str = "px";
    const KIND: &'static str = "disparity";
    const ALLOW_ZERO: bool = true;
}

/// Dense row-major grid with a validity mask.
///
/// Invalid entries always store `0.0` so that two images with equal masks
/// and equal valid values compare (and serialize) identically.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseImage<U: Unit> {
    size: ImageSize,
    values: Vec<f64>,
    valid: Vec<bool>,
    _unit: PhantomData<U>,
}

/// Per-pixel depth in metres (camera z, not range).
pub type DepthImage = DenseImage<Meters>;
/// Per-pixel horizontal disparity in pixels.
pub type DisparityImage = DenseImage<Pixels>;

impl<U: Unit> DenseImage<U> {
    /// All-invalid image.
    pub fn invalid(size: ImageSize) -> Self {
        Self {
            size,
            values: vec![0.0; size.pixel_count()],
            valid: vec![false; size.pixel_count()],
            _unit: PhantomData,
        }
    }

    /// Builds from raw values; entries that are non-finite or violate the
    /// unit's sign constraint become invalid.
    pub fn from_values(size: ImageSize, values: Vec<f64>) -> Result<Self> {
        if values.len() != size.pixel_count() {
            return Err(Error::invalid(format!(
                "expected {} values, got {}",
                size.pixel_count(),
                values.len()
            )));
        }
        let mut img = Self::invalid(size);
        for (i, v) in values.into_iter().enumerate() {
            img.set_index(i, Some(v));
        }
        Ok(img)
    }

    pub fn size(&self) -> ImageSize {
        self.size
    }

    pub fn width(&self) -> usize {
        self.size.width
    }

    pub fn height(&self) -> usize {
        self.size.height
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.get_index(y * self.size.width + x)
    }

    pub fn get_index(&self, i: usize) -> Option<f64> {
        self.valid[i].then(|| self.values[i])
    }

    pub fn set(&mut self, x: usize, y: usize, value: Option<f64>) {
        let i = y * self.size.width + x;
        self.set_index(i, value);
    }

    pub fn set_index(&mut self, i: usize, value: Option<f64>) {
        match value {
            Some(v) if admissible::<U>(v) => {
                self.values[i] = v;
                self.valid[i] = true;
            }
            _ => {
                self.values[i] = 0.0;
                self.valid[i] = false;
            }
        }
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.size.width + x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// `(x, y, value)` over valid pixels in row-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.size.width;
        self.valid
            .iter()
            .zip(&self.values)
            .enumerate()
            .filter(|(_, (ok, _))| **ok)
            .map(move |(i, (_, v))| (i % w, i / w, *v))
    }

    pub fn map_valid(&self, mut f: impl FnMut(f64) -> Option<f64>) -> Self {
        let mut out = Self::invalid(self.size);
        for i in 0..self.values.len() {
            if self.valid[i] {
                out.set_index(i, f(self.values[i]));
            }
        }
        out
    }
}

fn admissible<U: Unit>(v: f64) -> bool {
    v.is_finite() && (v > 0.0 || (U::ALLOW_ZERO && v == 0.0))
}

/// `Z = b f / d`.
pub fn depth_from_disparity(disparity: f64, baseline: f64, focal_px: f64) -> Result<f64> {
    ensure_positive("baseline", baseline)?;
    ensure_positive("focal length", focal_px)?;
    if !(disparity > 0.0) || !disparity.is_finite() {
        return Err(Error::InvalidDisparity(disparity));
    }
    Ok(baseline * focal_px / disparity)
}

/// Per-pixel depth; zero or invalid disparity maps to an invalid pixel.
pub fn depth_image_from_disparity(
    disparity: &DisparityImage,
    baseline: f64,
    focal_px: f64,
) -> Result<DepthImage> {
    ensure_positive("baseline", baseline)?;
    ensure_positive("focal length", focal_px)?;
    let bf = baseline * focal_px;
    let mut out = DepthImage::invalid(disparity.size());
    for i in 0..disparity.values().len() {
        if let Some(d) = disparity.get_index(i) {
            if d > 0.0 {
                out.set_index(i, Some(bf / d));
            }
        }
    }
    Ok(out)
}

/// Depth uncertainty `eps_z = z^2 eps_d / (b f)` for a disparity error `eps_d`.
pub fn depth_error(depth: f64, baseline: f64, focal_px: f64, disparity_error: f64) -> Result<f64> {
    ensure_positive("depth", depth)?;
    ensure_positive("baseline", baseline)?;
    ensure_positive("focal length", focal_px)?;
    if !(disparity_error >= 0.0) || !disparity_error.is_finite() {
        return Err(Error::invalid(format!(
            "disparity error must be >= 0, got {disparity_error}"
        )));
    }
    Ok(depth * depth * disparity_error / (baseline * focal_px))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_formula() {
        assert_eq!(depth_from_disparity(50.0, 0.1, 500.0).unwrap(), 1.0);
        assert_eq!(depth_from_disparity(25.0, 0.1, 500.0).unwrap(), 2.0);
        let z1 = depth_from_disparity(12.5, 0.1, 500.0).unwrap();
        let z2 = depth_from_disparity(25.0, 0.1, 500.0).unwrap();
        assert_eq!(z1, 2.0 * z2);
    }

    #[test]
    fn non_positive_disparity_is_rejected() {
        assert!(matches!(
            depth_from_disparity(0.0, 0.1, 500.0),
            Err(Error::InvalidDisparity(_))
        ));
        assert!(matches!(
            depth_from_disparity(-3.0, 0.1, 500.0),
            Err(Error::InvalidDisparity(_))
        ));
        assert!(depth_from_disparity(10.0, 0.0, 500.0).is_err());
    }

    #[test]
    fn depth_error_examples() {
        assert_eq!(depth_error(1.0, 0.1, 500.0, 0.0).unwrap(), 0.0);
        let e1 = depth_error(1.0, 0.1, 500.0, 1.0).unwrap();
        assert!((e1 - 0.02).abs() < 1e-15);
        let e2 = depth_error(2.0, 0.1, 500.0, 1.0).unwrap();
        assert!((e2 - 0.08).abs() < 1e-15);
        // finite-difference oracle on Z = b f / d at d = 50
        let fd = (depth_from_disparity(50.0, 0.1, 500.0).unwrap()
            - depth_from_disparity(51.0, 0.1, 500.0).unwrap())
        .abs();
        assert!((fd - e1).abs() / e1 < 0.02);
    }

    #[test]
    fn disparity_image_conversion_masks_zero() {
        let size = ImageSize::new(3, 1);
        let disp = DisparityImage::from_values(size, vec![50.0, 0.0, f64::NAN]).unwrap();
        assert_eq!(disp.valid_count(), 2);
        let depth = depth_image_from_disparity(&disp, 0.1, 500.0).unwrap();
        assert_eq!(depth.get(0, 0), Some(1.0));
        assert_eq!(depth.get(1, 0), None);
        assert_eq!(depth.get(2, 0), None);
    }

    #[test]
    fn depth_image_rejects_non_positive() {
        let img = DepthImage::from_values(ImageSize::new(2, 1), vec![0.0, -1.0]).unwrap();
        assert_eq!(img.valid_count(), 0);
        assert_eq!(img.values(), &[0.0, 0.0]);
    }
}
