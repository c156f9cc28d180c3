use std::collections::VecDeque;

use crate::geometry::ImageSize;

/// One 4-connected region of a binary mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    /// Row-major pixel indices.
    pub pixels: Vec<usize>,
    /// Mean pixel coordinate.
    pub centroid: (f64, f64),
    /// Inclusive bounding box `(x0, y0, x1, y1)`.
    pub bbox: (usize, usize, usize, usize),
}

impl Component {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// 4-connected components of `mask`, in order of their first pixel.
pub fn connected_components(mask: &[bool], size: ImageSize) -> Vec<Component> {
    connected_regions(mask, size, |_, _| true)
}

/// Components of `mask` where 4-neighbours `i`, `j` join only if
/// `linked(i, j)`.
pub fn connected_regions(mask: &[bool], size: ImageSize, linked: impl Fn(usize, usize) -> bool) -> Vec<Component> {
    let (w, h) = (size.width, size.height);
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        let (mut sx, mut sy) = (0.0, 0.0);
        let mut bbox = (usize::MAX, usize::MAX, 0, 0);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            pixels.push(i);
            sx += x as f64;
            sy += y as f64;
            bbox = (bbox.0.min(x), bbox.1.min(y), bbox.2.max(x), bbox.3.max(y));
            let mut visit = |j: usize| {
                if mask[j] && !seen[j] && linked(i, j) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        let n = pixels.len() as f64;
        pixels.sort_unstable();
        out.push(Component {
            pixels,
            centroid: (sx / n, sy / n),
            bbox,
        });
    }
    out
}

/// Median of a non-empty slice (mean of the two middle values for even length).
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Coordinate-wise median pixel of a set of row-major indices.
pub fn pixel_median(pixels: &[usize], width: usize) -> (f64, f64) {
    let mut xs: Vec<f64> = pixels.iter().map(|i| (i % width) as f64).collect();
    let mut ys: Vec<f64> = pixels.iter().map(|i| (i / width) as f64).collect();
    (median(&mut xs), median(&mut ys))
}
