use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `w = 1 / (1 + exp(-1 / z_close))`, which lies in `(0.5, 1)` for finite
/// positive depth.
pub fn blend_weight(z_close: f64) -> Result<f64> {
    if !(z_close > 0.0) {
        return Err(Error::invalid(format!("z_close must be > 0, got {z_close}")));
    }
    Ok(1.0 / (1.0 + (-1.0 / z_close).exp()))
}

/// `2 w - 1`: the sigmoid weight stretched onto `(0, 1)`, so that free
/// space gives `w -> 0`.
pub fn remapped_blend_weight(z_close: f64) -> Result<f64> {
    Ok(2.0 * blend_weight(z_close)? - 1.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMapping {
    Sigmoid,
    #[default]
    Remapped,
}

impl WeightMapping {
    /// Weight for a measured `z_close`; no obstacle in view gives the limit
    /// at infinite depth.
    pub fn weight(self, z_close: Option<f64>) -> Result<f64> {
        match (self, z_close) {
            (WeightMapping::Sigmoid, None) => Ok(0.5),
            (WeightMapping::Remapped, None) => Ok(0.0),
            (WeightMapping::Sigmoid, Some(z)) => blend_weight(z),
            (WeightMapping::Remapped, Some(z)) => remapped_blend_weight(z),
        }
    }
}

/// `normalize((1 - w) v_g + w v_free)`.
pub fn blend_direction(v_goal: &Vector3<f64>, v_free: &Vector3<f64>, w: f64) -> Result<Vector3<f64>> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::OutOfRange {
            value: w,
            min: 0.0,
            max: 1.0,
        });
    }
    let v = v_goal * (1.0 - w) + v_free * w;
    let n = v.norm();
    if !(n >= 1e-9) {
        return Err(Error::DegenerateBlend);
    }
    Ok(v / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert!((blend_weight(1.0).unwrap() - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!((blend_weight(1e-3).unwrap() - 1.0).abs() < 1e-12);
        assert!((blend_weight(1e9).unwrap() - 0.5).abs() < 1e-9);
        assert!(blend_weight(0.0).is_err());
        assert!(blend_weight(-1.0).is_err());
        assert!((remapped_blend_weight(1e9).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn direction_endpoints() {
        let g = Vector3::x();
        let f = Vector3::y();
        assert_eq!(blend_direction(&g, &f, 0.0).unwrap(), g);
        assert_eq!(blend_direction(&g, &f, 1.0).unwrap(), f);
        assert!((blend_direction(&g, &g, 0.3).unwrap() - g).norm() < 1e-15);
        assert!(matches!(blend_direction(&g, &-g, 0.5), Err(Error::DegenerateBlend)));
        assert!(blend_direction(&g, &f, 1.5).is_err());
    }
}
