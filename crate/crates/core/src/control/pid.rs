use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 0.8,
            ki: 0.05,
            kd: 0.2,
        }
    }
}

/// Discrete PID on a 3-vector error: trapezoidal integral, backward
/// difference derivative, per-component integral clamp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PidState {
    pub gains: PidGains,
    pub dt: f64,
    pub integral_limit: f64,
    integral: Vector3<f64>,
    previous: Option<Vector3<f64>>,
}

impl PidState {
    pub fn new(gains: PidGains, dt: f64, integral_limit: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("sample period must be > 0, got {dt}")));
        }
        if !(integral_limit >= 0.0) {
            return Err(Error::invalid("integral limit must be >= 0"));
        }
        Ok(Self {
            gains,
            dt,
            integral_limit,
            integral: Vector3::zeros(),
            previous: None,
        })
    }

    pub fn integral(&self) -> Vector3<f64> {
        self.integral
    }

    pub fn reset(&mut self) {
        self.integral = Vector3::zeros();
        self.previous = None;
    }

    pub fn step(&mut self, error: &Vector3<f64>) -> Vector3<f64> {
        let (area, derivative) = match self.previous {
            Some(prev) => ((error + prev) * (self.dt / 2.0), (error - prev) / self.dt),
            None => (error * self.dt, Vector3::zeros()),
        };
        let l = self.integral_limit;
        self.integral = (self.integral + area).map(|v| v.clamp(-l, l));
        self.previous = Some(*error);
        error * self.gains.kp + self.integral * self.gains.ki + derivative * self.gains.kd
    }
}

/// One PID update; see [`PidState::step`].
pub fn pid_step(state: &mut PidState, error: &Vector3<f64>) -> Vector3<f64> {
    state.step(error)
}
