use rand::Rng;
use serde::{Deserialize, Serialize};

use super::table::{equally_spaced, CalibrationTable};
use crate::error::{Error, Result};

/// Linear baseline actuator: stroke limits plus multiplicative noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActuatorModel {
    pub min: f64,
    pub max: f64,
    /// Half-width of the uniform relative error.
    pub noise: f64,
    pub samples_per_command: usize,
}

impl ActuatorModel {
    /// Half-width matching a 0.7 % worst-case baseline error.
    pub const DEFAULT_NOISE: f64 = 0.007;

    pub fn new(min: f64, max: f64, noise: f64) -> Result<Self> {
        let model = Self {
            min,
            max,
            noise,
            samples_per_command: 10,
        };
        model.validate()?;
        Ok(model)
    }

    /// Stroke equal to the table range.
    pub fn for_table(table: &CalibrationTable, noise: f64) -> Result<Self> {
        let (min, max) = table.range();
        Self::new(min, max, noise)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && 0.0 < self.min && self.min < self.max) {
            return Err(Error::invalid(format!(
                "actuator limits [{}, {}] must satisfy 0 < min < max",
                self.min, self.max
            )));
        }
        if !(self.noise.is_finite() && (0.0..1.0).contains(&self.noise)) {
            return Err(Error::invalid(format!("actuator noise {} must be in [0, 1)", self.noise)));
        }
        if self.samples_per_command == 0 {
            return Err(Error::invalid("samples_per_command must be >= 1"));
        }
        Ok(())
    }

    /// Checks that the stroke lies inside the table range.
    pub fn validate_against(&self, table: &CalibrationTable) -> Result<()> {
        let (lo, hi) = table.range();
        if self.min < lo || self.max > hi {
            return Err(Error::invalid(format!(
                "actuator stroke [{}, {}] exceeds calibration range [{lo}, {hi}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn clamp(&self, target: f64) -> f64 {
        target.clamp(self.min, self.max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BaselineCommand {
    pub target: f64,
    pub achieved: f64,
    /// The target lay outside the stroke and was saturated.
    pub clamped: bool,
}

/// `achieved = clamp(target) (1 + eta)`, `eta ~ U[-noise, noise]`.
pub fn command_baseline<R: Rng + ?Sized>(
    model: &ActuatorModel,
    target: f64,
    rng: &mut R,
) -> Result<BaselineCommand> {
    if !target.is_finite() {
        return Err(Error::invalid(format!("baseline target {target} is not finite")));
    }
    let limited = model.clamp(target);
    let eta = if model.noise > 0.0 {
        rng.gen_range(-model.noise..=model.noise)
    } else {
        0.0
    };
    Ok(BaselineCommand {
        target,
        achieved: limited * (1.0 + eta),
        clamped: limited != target,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ActuatorSample {
    pub target: f64,
    pub achieved: f64,
}

/// `samples_per_command` commands at each of `positions` equally spaced
/// targets across the stroke.
pub fn sweep_actuator<R: Rng + ?Sized>(
    model: &ActuatorModel,
    positions: usize,
    rng: &mut R,
) -> Result<Vec<ActuatorSample>> {
    model.validate()?;
    let mut out = Vec::with_capacity(positions * model.samples_per_command);
    for target in equally_spaced(model.min, model.max, positions) {
        for _ in 0..model.samples_per_command {
            let c = command_baseline(model, target, rng)?;
            out.push(ActuatorSample {
                target,
                achieved: c.achieved,
            });
        }
    }
    Ok(out)
}

/// Least-squares line `achieved = slope target + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest `|achieved - fitted|`.
    pub max_residual: f64,
    /// Largest `|achieved - target|`.
    pub max_error: f64,
}

pub fn fit_line(samples: &[ActuatorSample]) -> Result<LineFit> {
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.target).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.achieved).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.target - mx).powi(2)).sum();
    if samples.len() < 2 || !(sxx > 0.0) {
        return Err(Error::invalid("line fit needs at least two distinct targets"));
    }
    let sxy: f64 = samples
        .iter()
        .map(|s| (s.target - mx) * (s.achieved - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = samples
        .iter()
        .map(|s| (s.achieved - slope * s.target - intercept).abs())
        .fold(0.0, f64::max);
    let max_error = samples
        .iter()
        .map(|s| (s.achieved - s.target).abs())
        .fold(0.0, f64::max);
    Ok(LineFit {
        slope,
        intercept,
        max_residual,
        max_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_command_is_exact() {
        let m = ActuatorModel::new(0.1, 0.3, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = command_baseline(&m, 0.21, &mut rng).unwrap();
        assert_eq!(c.achieved, 0.21);
        assert!(!c.clamped);
    }

    #[test]
    fn noise_bound_at_260mm() {
        let m = ActuatorModel::new(0.1, 0.3, 0.007).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let c = command_baseline(&m, 0.26, &mut rng).unwrap();
            assert!((c.achieved - 0.26).abs() <= 1.83e-3);
        }
    }

    #[test]
    fn saturation() {
        let m = ActuatorModel::new(0.1, 0.3, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = command_baseline(&m, 0.5, &mut rng).unwrap();
        assert_eq!(c.achieved, 0.3);
        assert!(c.clamped);
        assert!(command_baseline(&m, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn sweep_regression() {
        let m = ActuatorModel::new(0.1, 0.3, 0.007).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples = sweep_actuator(&m, 10, &mut rng).unwrap();
        assert_eq!(samples.len(), 100);
        let fit = fit_line(&samples).unwrap();
        assert!((fit.slope - 1.0).abs() <= 0.01, "{fit:?}");
        assert!(fit.max_error <= 0.007 * 0.3);
    }

    #[test]
    fn invalid_models() {
        assert!(ActuatorModel::new(0.3, 0.1, 0.0).is_err());
        assert!(ActuatorModel::new(0.1, 0.3, -0.1).is_err());
    }
}
