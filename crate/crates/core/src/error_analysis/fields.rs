use serde::Serialize;

use crate::geometry::ImageSize;

/// Per-pixel absolute x/y displacement for one camera.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorGrid {
    pub size: ImageSize,
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
}

/// Max/mean of a field. `ratio` is `ey_max / ex_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub ex_max: f64,
    pub ey_max: f64,
    pub ex_mean: f64,
    pub ey_mean: f64,
    pub ratio: f64,
}

impl ErrorGrid {
    pub fn zeros(size: ImageSize) -> Self {
        Self {
            size,
            ex: vec![0.0; size.pixel_count()],
            ey: vec![0.0; size.pixel_count()],
        }
    }

    pub fn at(&self, u: usize, v: usize) -> (f64, f64) {
        let i = v * self.size.width + u;
        (self.ex[i], self.ey[i])
    }

    pub fn summary(&self) -> ErrorSummary {
        let n = self.ex.len().max(1) as f64;
        let ex_max = self.ex.iter().copied().fold(0.0, f64::max);
        let ey_max = self.ey.iter().copied().fold(0.0, f64::max);
        ErrorSummary {
            ex_max,
            ey_max,
            ex_mean: self.ex.iter().sum::<f64>() / n,
            ey_mean: self.ey.iter().sum::<f64>() / n,
            ratio: ey_max / ex_max,
        }
    }

    /// Reflection about the image diagonal, swapping the x and y fields.
    pub fn transposed(&self) -> Self {
        let (w, h) = (self.size.width, self.size.height);
        let mut out = Self::zeros(ImageSize::new(h, w));
        for v in 0..h {
            for u in 0..w {
                let src = v * w + u;
                let dst = u * h + v;
                out.ex[dst] = self.ey[src];
                out.ey[dst] = self.ex[src];
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.ex.iter().chain(&self.ey).all(|e| *e == 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StereoErrorField {
    pub left: ErrorGrid,
    pub right: ErrorGrid,
}

impl StereoErrorField {
    /// `(ex_L_max / ex_R_max, ey_L_max / ey_R_max)`.
    pub fn left_right_ratios(&self) -> (f64, f64) {
        let l = self.left.summary();
        let r = self.right.summary();
        (l.ex_max / r.ex_max, l.ey_max / r.ey_max)
    }
}
