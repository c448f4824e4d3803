use std::path::{Path, PathBuf};

use dppbo_core::bench::ObjectiveSpec;
use dppbo_core::model::KernelSpec;
use dppbo_core::strategies::StrategyConfig;
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

/// Kernel given either by its lengthscale or by `gamma = lengthscale^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengthscale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "unit")]
    pub output_scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl KernelConfig {
    pub fn from_gamma(gamma: f64) -> Self {
        Self {
            lengthscale: None,
            gamma: Some(gamma),
            output_scale: 1.0,
        }
    }

    pub fn spec(&self) -> Result<KernelSpec> {
        let lengthscale = match (self.lengthscale, self.gamma) {
            (Some(l), None) => l,
            (None, Some(g)) if g > 0.0 => g.sqrt(),
            (None, Some(_)) => return Err(HarnessError::Config("gamma must be positive".into())),
            _ => {
                return Err(HarnessError::Config(
                    "kernel needs exactly one of `lengthscale` or `gamma`".into(),
                ))
            }
        };
        Ok(KernelSpec::with_scale(lengthscale, self.output_scale)?)
    }

    /// Human-readable description of the parametrization in use.
    pub fn convention(&self) -> String {
        match (self.lengthscale, self.gamma) {
            (Some(l), _) => format!("lengthscale = {l}"),
            (_, Some(g)) => format!("gamma = lengthscale^2 = {g}"),
            _ => "unset".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Surrogate {
    /// Exact GP conditioning with the kernel.
    #[default]
    Exact,
    /// GP whose prior covariance is the quadrature-feature kernel.
    Feature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kernel: KernelConfig,
    /// Observation noise SD assumed by the model.
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    #[serde(default)]
    pub surrogate: Surrogate,
    /// Quadrature nodes per dimension for feature models; automatic if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_nodes: Option<usize>,
}

fn default_noise_sd() -> f64 {
    0.01
}

fn default_batch() -> usize {
    5
}

fn default_replications() -> usize {
    15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objective: ObjectiveSpec,
    pub strategy: StrategyConfig,
    pub model: ModelConfig,
    /// Number of rounds.
    #[serde(rename = "T")]
    pub rounds: usize,
    /// Batch size.
    #[serde(rename = "B", default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.batch_size == 0 || self.replications == 0 {
            return Err(HarnessError::Config("T, B and replications must be at least 1".into()));
        }
        if !(self.model.noise_sd > 0.0 && self.model.noise_sd.is_finite()) {
            return Err(HarnessError::Config("model noise_sd must be positive".into()));
        }
        self.objective.validate()?;
        self.strategy.validate()?;
        self.model.kernel.spec()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Short label used for plot legends.
    pub fn label(&self) -> String {
        let mut label = self.strategy.strategy.name().to_string();
        if let dppbo_core::strategies::LambdaSchedule::Step { t_init, .. } =
            self.strategy.lambda_schedule
        {
            label.push_str(&format!(" (T_init={t_init})"));
        }
        if let Some(a) = self.strategy.phe_a {
            label.push_str(&format!(" (a={a})"));
        }
        label
    }
}
