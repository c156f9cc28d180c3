use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{DisparityImage, ImageSize};

/// Row-major grey image.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    size: ImageSize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(size: ImageSize, data: Vec<f64>) -> Result<Self> {
        if data.len() != size.pixel_count() {
            return Err(Error::invalid(format!(
                "expected {} pixels, got {}",
                size.pixel_count(),
                data.len()
            )));
        }
        Ok(Self { size, data })
    }

    pub fn from_fn(size: ImageSize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..size.pixel_count())
            .map(|i| f(i % size.width, i / size.width))
            .collect();
        Self { size, data }
    }

    pub fn size(&self) -> ImageSize {
        self.size
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.size.width + x]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockMatchConfig {
    /// Odd window side, pixels.
    pub window: usize,
    pub max_disparity: usize,
    /// Allowed left/right disagreement, pixels.
    pub lr_tolerance: usize,
}

impl Default for BlockMatchConfig {
    fn default() -> Self {
        Self {
            window: 5,
            max_disparity: 32,
            lr_tolerance: 1,
        }
    }
}

/// Sum of absolute differences between the window at `(xl, y)` in `a` and
/// `(xr, y)` in `b`.
fn sad(a: &GrayImage, b: &GrayImage, xl: usize, xr: usize, y: usize, r: usize) -> f64 {
    let mut acc = 0.0;
    for dy in 0..=2 * r {
        let row = y + dy - r;
        for dx in 0..=2 * r {
            acc += (a.get(xl + dx - r, row) - b.get(xr + dx - r, row)).abs();
        }
    }
    acc
}

/// Best disparity for one pixel; `None` when no candidate fits or when the
/// minimum cost is shared by more than half of the candidates.
fn best(costs: &[(usize, f64)]) -> Option<usize> {
    let (d, min) = costs
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let tol = 1e-9 * (1.0 + min.abs());
    let ties = costs.iter().filter(|(_, c)| (c - min).abs() <= tol).count();
    (2 * ties <= costs.len()).then_some(d)
}

/// Integer disparity per pixel by SAD matching along rows, with a
/// left/right consistency check.
pub fn block_match(
    left: &GrayImage,
    right: &GrayImage,
    config: &BlockMatchConfig,
) -> Result<DisparityImage> {
    if left.size != right.size {
        return Err(Error::invalid("left and right images differ in size"));
    }
    if config.window % 2 == 0 || config.window == 0 {
        return Err(Error::invalid(format!("window {} must be odd", config.window)));
    }
    let size = left.size;
    let (w, h) = (size.width, size.height);
    let r = config.window / 2;
    if w <= 2 * r || h <= 2 * r {
        return Ok(DisparityImage::invalid(size));
    }
    let max_d = config.max_disparity;
    let rows: Vec<(Vec<Option<usize>>, Vec<Option<usize>>)> = (r..h - r)
        .into_par_iter()
        .map(|y| {
            let mut from_left = vec![None; w];
            let mut from_right = vec![None; w];
            let mut costs = Vec::with_capacity(max_d + 1);
            for x in r..w - r {
                costs.clear();
                for d in 0..=max_d.min(x - r) {
                    costs.push((d, sad(left, right, x, x - d, y, r)));
                }
                from_left[x] = best(&costs);
                costs.clear();
                for d in 0..=max_d.min(w - 1 - r - x) {
                    costs.push((d, sad(left, right, x + d, x, y, r)));
                }
                from_right[x] = best(&costs);
            }
            (from_left, from_right)
        })
        .collect();
    let mut out = DisparityImage::invalid(size);
    for (row, (from_left, from_right)) in rows.iter().enumerate() {
        let y = row + r;
        for x in r..w - r {
            let Some(d) = from_left[x] else { continue };
            let Some(back) = from_right[x - d] else { continue };
            if back.abs_diff(d) <= config.lr_tolerance {
                out.set(x, y, Some(d as f64));
            }
        }
    }
    Ok(out)
}
