//! Batch proposal strategies. Each one maps the round's posterior (and,
//! for PHE variants, the history through a feature model) to a batch.

mod proposers;
mod schedule;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dpp::{default_mcmc_steps, Batch};
use crate::model::{FeatureModel, GaussianPosterior, History};
use crate::{Error, Result};

pub use proposers::{
    maximizer_region, propose_dpp_phe, propose_dpp_ts, propose_dpp_ts_alt, propose_gp_bucb,
    propose_hal_ts, propose_phe, propose_pure_dpp, propose_ts, propose_ucb_dpp_sample,
    propose_ucb_pe, propose_uniform, PheProposal,
};
pub use schedule::{beta_continuous, beta_finite, beta_schedule, BetaSchedule, LambdaSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Ts,
    HalTs,
    GpBucb,
    UcbPe,
    UcbDppSample,
    DppTs,
    DppTsAlt,
    Phe,
    DppPhe,
    Uniform,
    PureDpp,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 11] = [
        Self::Ts,
        Self::HalTs,
        Self::GpBucb,
        Self::UcbPe,
        Self::UcbDppSample,
        Self::DppTs,
        Self::DppTsAlt,
        Self::Phe,
        Self::DppPhe,
        Self::Uniform,
        Self::PureDpp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ts => "ts",
            Self::HalTs => "hal-ts",
            Self::GpBucb => "gp-bucb",
            Self::UcbPe => "ucb-pe",
            Self::UcbDppSample => "ucb-dpp-sample",
            Self::DppTs => "dpp-ts",
            Self::DppTsAlt => "dpp-ts-alt",
            Self::Phe => "phe",
            Self::DppPhe => "dpp-phe",
            Self::Uniform => "uniform",
            Self::PureDpp => "pure-dpp",
        }
    }

    pub fn uses_features(self) -> bool {
        matches!(self, Self::Phe | Self::DppPhe)
    }

    /// Strategies whose batch is a deterministic function of the posterior.
    pub fn is_deterministic(self) -> bool {
        matches!(self, Self::GpBucb | Self::UcbPe)
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub strategy: StrategyKind,
    #[serde(default)]
    pub beta_schedule: BetaSchedule,
    #[serde(default)]
    pub lambda_schedule: LambdaSchedule,
    /// Pseudo-reward scale; required by `phe` and `dpp-phe` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phe_a: Option<f64>,
    /// Chain length per batch; defaults to [`default_mcmc_steps`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc_steps: Option<usize>,
}

impl StrategyConfig {
    pub fn new(strategy: StrategyKind) -> Self {
        Self {
            strategy,
            beta_schedule: BetaSchedule::default(),
            lambda_schedule: LambdaSchedule::default(),
            phe_a: None,
            mcmc_steps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lambda_schedule.validate()?;
        match (self.strategy.uses_features(), self.phe_a) {
            (true, None) => Err(Error::config(format!(
                "strategy `{}` needs phe_a",
                self.strategy.name()
            ))),
            (true, Some(a)) if !(a >= 0.0 && a.is_finite()) => {
                Err(Error::config("phe_a must be non-negative"))
            }
            (false, Some(_)) => Err(Error::config(format!(
                "phe_a is only meaningful for phe and dpp-phe, not `{}`",
                self.strategy.name()
            ))),
            _ => Ok(()),
        }
    }

    pub fn steps(&self, batch_size: usize, domain_size: usize) -> usize {
        self.mcmc_steps
            .unwrap_or_else(|| default_mcmc_steps(batch_size, domain_size))
    }
}

/// Everything a strategy may look at when proposing the batch of round `t`.
#[derive(Debug, Clone, Copy)]
pub struct RoundInput<'a> {
    pub posterior: &'a GaussianPosterior,
    pub history: &'a History,
    /// Required by the PHE strategies.
    pub features: Option<&'a FeatureModel>,
    /// Round index, starting at 1.
    pub t: usize,
    pub batch_size: usize,
}

/// Proposes the batch for one round.
pub fn propose<R: Rng + ?Sized>(
    config: &StrategyConfig,
    input: &RoundInput<'_>,
    rng: &mut R,
) -> Result<Batch> {
    let post = input.posterior;
    let b = input.batch_size;
    let n = post.len();
    let steps = config.steps(b, n);
    let beta = || beta_schedule(&config.beta_schedule, input.t, b, n, post.grid().dim());
    let lambda = config.lambda_schedule.at(input.t);
    match config.strategy {
        StrategyKind::Ts => propose_ts(post, b, rng),
        StrategyKind::HalTs => propose_hal_ts(post, b, rng),
        StrategyKind::GpBucb => propose_gp_bucb(post, b, beta()?),
        StrategyKind::UcbPe => propose_ucb_pe(post, b, beta()?),
        StrategyKind::UcbDppSample => propose_ucb_dpp_sample(post, b, beta()?, steps, rng),
        StrategyKind::DppTs => propose_dpp_ts(post, b, lambda, steps, rng),
        StrategyKind::DppTsAlt => propose_dpp_ts_alt(post, b, lambda, steps, rng),
        StrategyKind::Phe | StrategyKind::DppPhe => {
            let model = input
                .features
                .ok_or_else(|| Error::config("PHE strategies need a feature model"))?;
            let a = config
                .phe_a
                .ok_or_else(|| Error::config("PHE strategies need phe_a"))?;
            let fit = model.fit(input.history.observations())?;
            if config.strategy == StrategyKind::Phe {
                propose_phe(&fit, b, a, rng)
            } else {
                propose_dpp_phe(&fit, model.noise_var(), b, a, lambda, steps, rng)
            }
        }
        StrategyKind::Uniform => propose_uniform(n, b, rng),
        StrategyKind::PureDpp => propose_pure_dpp(post, b, steps, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.name().parse::<StrategyKind>().unwrap(), k);
        }
        assert!("dpp".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn phe_scale_is_required_exactly_for_phe() {
        let mut c = StrategyConfig::new(StrategyKind::Phe);
        assert!(c.validate().is_err());
        c.phe_a = Some(0.5);
        assert!(c.validate().is_ok());
        let mut d = StrategyConfig::new(StrategyKind::Ts);
        d.phe_a = Some(0.5);
        assert!(d.validate().is_err());
    }
}
