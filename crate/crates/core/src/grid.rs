use crate::error::{LabError, Result};
use std::fmt;
use std::str::FromStr;

/// Inclusive evenly spaced grid `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(LabError::invalid("grid bounds must be finite"));
        }
        if step <= 0.0 {
            return Err(LabError::invalid(format!("grid step must be positive, got {step}")));
        }
        if stop < start {
            return Err(LabError::invalid(format!("grid stop {stop} is below start {start}")));
        }
        Ok(GridSpec { start, stop, step })
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid points. When `1 / step` is an integer `m`, points are produced as
    /// `k / m` so that decimal lattice values such as `0.25` or `1.0` come out
    /// exact instead of accumulating `i * step` rounding.
    pub fn points(&self) -> Vec<f64> {
        let n = self.len();
        let inv = 1.0 / self.step;
        let m = inv.round();
        if m >= 1.0 && (inv - m).abs() <= 1e-9 * m {
            let k0 = (self.start * m).round();
            if (self.start * m - k0).abs() <= 1e-6 {
                return (0..n).map(|i| (k0 + i as f64) / m).collect();
            }
        }
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for GridSpec {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(LabError::invalid(format!("grid must be start:stop:step, got `{s}`")));
        }
        let parse =
            |t: &str| t.trim().parse::<f64>().map_err(|_| LabError::invalid(format!("bad number `{t}` in grid `{s}`")));
        GridSpec::new(parse(parts[0])?, parse(parts[1])?, parse(parts[2])?)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}
