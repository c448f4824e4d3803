use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    #[default]
    SquaredExponential,
}

/// Stationary covariance `k(x, x') = s * exp(-|x - x'|^2 / (2 l^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(default)]
    pub family: KernelFamily,
    pub lengthscale: f64,
    #[serde(default = "unit")]
    pub output_scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl KernelSpec {
    pub fn squared_exponential(lengthscale: f64) -> Result<Self> {
        Self::with_scale(lengthscale, 1.0)
    }

    pub fn with_scale(lengthscale: f64, output_scale: f64) -> Result<Self> {
        let spec = Self {
            family: KernelFamily::SquaredExponential,
            lengthscale,
            output_scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Kernel written as `exp(-r^2 / (2 gamma))`, i.e. `gamma = l^2`.
    pub fn from_gamma(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::config("gamma must be positive"));
        }
        Self::squared_exponential(gamma.sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lengthscale > 0.0 && self.lengthscale.is_finite()) {
            return Err(Error::config("lengthscale must be positive and finite"));
        }
        if !(self.output_scale >= 0.0 && self.output_scale.is_finite()) {
            return Err(Error::config("output scale must be non-negative"));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::config(format!(
                "dimension mismatch: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        self.output_scale * self.profile(r2)
    }

    /// Unscaled correlation at squared distance `r2`.
    pub(crate) fn profile(&self, r2: f64) -> f64 {
        match self.family {
            KernelFamily::SquaredExponential => {
                (-r2 / (2.0 * self.lengthscale * self.lengthscale)).exp()
            }
        }
    }
}
