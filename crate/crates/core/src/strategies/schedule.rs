use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Exploration weight for UCB-type rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum BetaSchedule {
    /// `2 ln(B (t^2 + 1) N / sqrt(2 pi))` for a finite domain of size `N`.
    FiniteDomain,
    /// `4 (d + 1) log(B t) + 2 d log(d a b sqrt(pi))` for a box in `R^d`.
    ContinuousDomain {
        #[serde(default)]
        a: Option<f64>,
        #[serde(default)]
        b: Option<f64>,
    },
    /// Constant `beta`.
    Fixed { value: f64 },
}

impl Default for BetaSchedule {
    fn default() -> Self {
        Self::FiniteDomain
    }
}

pub fn beta_finite(t: usize, batch_size: usize, domain_size: f64) -> f64 {
    let t = t as f64;
    let arg = batch_size as f64 * (t * t + 1.0) * domain_size / (2.0 * std::f64::consts::PI).sqrt();
    2.0 * arg.ln()
}

pub fn beta_continuous(t: usize, batch_size: usize, dim: usize, a: f64, b: f64) -> f64 {
    let d = dim as f64;
    4.0 * (d + 1.0) * ((batch_size * t) as f64).ln()
        + 2.0 * d * (d * a * b * std::f64::consts::PI.sqrt()).ln()
}

/// `beta_t` for round `t >= 1` on a grid of `domain_size` points in `dim`
/// dimensions.
pub fn beta_schedule(
    schedule: &BetaSchedule,
    t: usize,
    batch_size: usize,
    domain_size: usize,
    dim: usize,
) -> Result<f64> {
    if t == 0 {
        return Err(Error::config("rounds are numbered from 1"));
    }
    match *schedule {
        BetaSchedule::FiniteDomain => Ok(beta_finite(t, batch_size, domain_size as f64)),
        BetaSchedule::ContinuousDomain { a: Some(a), b: Some(b) } if a > 0.0 && b > 0.0 => {
            Ok(beta_continuous(t, batch_size, dim, a, b))
        }
        BetaSchedule::ContinuousDomain { .. } => Err(Error::config(
            "continuous-domain beta needs positive constants a and b",
        )),
        BetaSchedule::Fixed { value } if value >= 0.0 => Ok(value),
        BetaSchedule::Fixed { .. } => Err(Error::config("beta must be non-negative")),
    }
}

/// Diversity strength per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum LambdaSchedule {
    Constant { lambda: f64 },
    /// `lambda` for rounds `t <= t_init`, zero afterwards.
    Step { lambda: f64, t_init: usize },
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        Self::Constant { lambda: 1.0 }
    }
}

impl LambdaSchedule {
    pub fn validate(&self) -> Result<()> {
        let lambda = match *self {
            Self::Constant { lambda } | Self::Step { lambda, .. } => lambda,
        };
        if lambda >= 0.0 && lambda.is_finite() {
            Ok(())
        } else {
            Err(Error::config("lambda must be non-negative"))
        }
    }

    pub fn at(&self, t: usize) -> f64 {
        match *self {
            Self::Constant { lambda } => lambda,
            Self::Step { lambda, t_init } => {
                if t <= t_init {
                    lambda
                } else {
                    0.0
                }
            }
        }
    }
}
