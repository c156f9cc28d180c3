use std::fmt;

use nalgebra::Vector2;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pixel coordinate carried by errors that can be traced to one image location.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelRef(pub f64, pub f64);

impl From<Vector2<f64>> for PixelRef {
    fn from(p: Vector2<f64>) -> Self {
        PixelRef(p.x, p.y)
    }
}

impl fmt::Display for PixelRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("undistortion did not converge at pixel {pixel} after {iterations} iterations (residual {residual:e})")]
    Convergence {
        pixel: PixelRef,
        iterations: usize,
        residual: f64,
    },

    #[error("distortion map is not invertible near pixel {pixel} (jacobian determinant {determinant:e})")]
    NonInvertible { pixel: PixelRef, determinant: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid disparity {0}: must be > 0")]
    InvalidDisparity(f64),

    #[error("unbounded regime: b*f = {bf} <= k*Z = {kz}; no velocity keeps the disparity error under k")]
    UnboundedRegime { bf: f64, kz: f64 },

    #[error("value {value} outside valid range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("degenerate blend: goal and free directions cancel")]
    DegenerateBlend,

    #[error("no gap: depth distribution is unimodal (separation {separation:.4} m, spread {spread:.4} m)")]
    NoGap { separation: f64, spread: f64 },

    #[error("insufficient valid depth: {valid} of {total} pixels")]
    InsufficientData { valid: usize, total: usize },

    #[error("record {index}: {message}")]
    Record { index: usize, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be > 0, got {value}")))
    }
}
