use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Default baseline gain `K` in `b = K z_ref`.
pub const DEFAULT_BASELINE_GAIN: f64 = 0.15;
/// Default actuator stroke speed, m/s.
pub const DEFAULT_SLEW_RATE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineLimits {
    pub min: f64,
    pub max: f64,
}

impl BaselineLimits {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && min < max && max.is_finite()) {
            return Err(Error::invalid(format!("baseline limits [{min}, {max}] must satisfy 0 < min < max")));
        }
        Ok(Self { min, max })
    }

    pub fn clamp(&self, b: f64) -> f64 {
        b.clamp(self.min, self.max)
    }

    pub fn contains(&self, b: f64) -> bool {
        (self.min..=self.max).contains(&b)
    }
}

impl Default for BaselineLimits {
    fn default() -> Self {
        Self { min: 0.1, max: 0.3 }
    }
}

/// `b = clamp(K z_ref)`.
pub fn baseline_law(z_ref: f64, gain: f64, limits: &BaselineLimits) -> Result<f64> {
    ensure_positive("z_ref", z_ref)?;
    ensure_positive("baseline gain", gain)?;
    Ok(limits.clamp(gain * z_ref))
}

/// First-order low-pass filter `y += a (x - y)`, `a = dt / (dt + 1 / (2 pi fc))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowPass {
    alpha: f64,
    state: Option<f64>,
}

impl LowPass {
    pub fn new(cutoff_hz: f64, dt: f64) -> Result<Self> {
        ensure_positive("cutoff", cutoff_hz)?;
        ensure_positive("sample period", dt)?;
        let rc = 1.0 / (2.0 * std::f64::consts::PI * cutoff_hz);
        Ok(Self {
            alpha: dt / (dt + rc),
            state: None,
        })
    }

    /// The first sample initialises the state.
    pub fn update(&mut self, x: f64) -> f64 {
        let y = match self.state {
            Some(y) => y + self.alpha * (x - y),
            None => x,
        };
        self.state = Some(y);
        y
    }

    pub fn value(&self) -> Option<f64> {
        self.state
    }

    pub fn reset_to(&mut self, x: f64) {
        self.state = Some(x);
    }
}

/// Bounds the per-step change of the commanded baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlewLimiter {
    pub rate: f64,
    current: f64,
}

impl SlewLimiter {
    pub fn new(rate: f64, initial: f64) -> Result<Self> {
        ensure_positive("slew rate", rate)?;
        Ok(Self {
            rate,
            current: initial,
        })
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn step(&mut self, target: f64, dt: f64) -> f64 {
        let max = self.rate * dt;
        self.current += (target - self.current).clamp(-max, max);
        self.current
    }

    pub fn reset_to(&mut self, value: f64) {
        self.current = value;
    }
}
