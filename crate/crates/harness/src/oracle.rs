//! Exact small-domain checks of the batch samplers, runnable from the CLI.

use std::str::FromStr;
use std::sync::Arc;

use dppbo_core::dpp::{
    detailed_balance_check, estimate_pmax, exact_batch_distribution, restricted_logdet, run_sampler,
    Batch, BatchDistribution, LEnsemble, PmaxEstimate, SamplerKind, TabulatedProposal,
};
use dppbo_core::model::{DomainGrid, GaussianPosterior, GpPrior, KernelSpec, Observation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Enumeration,
    DetailedBalance,
    Reweighting,
    All,
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enumeration" => Ok(Suite::Enumeration),
            "detailed-balance" => Ok(Suite::DetailedBalance),
            "reweighting" => Ok(Suite::Reweighting),
            "all" => Ok(Suite::All),
            other => Err(HarnessError::Config(format!(
                "unknown suite `{other}` (expected enumeration, detailed-balance, reweighting or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

/// Small random posterior on a 1-d grid, with a few random observations.
pub fn random_posterior(n: usize, seed: u64) -> Result<GaussianPosterior> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Arc::new(DomainGrid::unit_interval(n)?);
    let kernel = KernelSpec::squared_exponential(rng.random_range(0.15..0.8))?;
    let prior = GaussianPosterior::new(Arc::new(GpPrior::new(grid, kernel, rng.random_range(0.05..0.5))?));
    let obs: Vec<Observation> = (0..rng.random_range(0..4))
        .map(|_| Observation::new(rng.random_range(0..n), rng.random_range(-1.0..1.0)))
        .collect();
    Ok(prior.condition(&obs)?)
}

/// Empirical batch distribution of `chains` independent runs of `kind`.
pub fn chain_distribution(
    kind: SamplerKind,
    l: &LEnsemble,
    pmax: &PmaxEstimate,
    b: usize,
    steps: usize,
    chains: usize,
    seed: u64,
) -> Result<BatchDistribution> {
    let proposal = TabulatedProposal::new(pmax)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..chains)
        .map(|_| run_sampler(kind, l, b, steps, &proposal, &mut rng).map(Batch::into_inner))
        .collect::<dppbo_core::Result<Vec<_>>>()?;
    Ok(BatchDistribution::from_samples(l.len(), b, samples.iter().map(Vec::as_slice))?)
}

/// TV distance between each sampler's chains and the enumerated target on
/// a random `n`-point MI kernel.
pub fn enumeration_suite(n: usize, b: usize, chains: usize, steps: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let post = random_posterior(n, seed)?;
    let l = LEnsemble::mutual_information(&post, 1.0)?;
    let pmax = estimate_pmax(&post, 100_000, &mut ChaCha8Rng::seed_from_u64(seed ^ 1))?;
    let exact = exact_batch_distribution(&l, b, &pmax)?;
    SamplerKind::ALL
        .iter()
        .map(|&kind| {
            let emp = chain_distribution(kind, &l, &pmax, b, steps, chains, seed.wrapping_add(kind as u64))?;
            Ok(CheckResult {
                name: format!("enumeration/{}", kind.name()),
                value: emp.total_variation(&exact),
                tolerance: 0.05,
            })
        })
        .collect()
}

/// Largest relative detailed-balance violation of each sampler.
pub fn detailed_balance_suite(n: usize, b: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let post = random_posterior(n, seed)?;
    let l = LEnsemble::mutual_information(&post, 1.0)?;
    let pmax = estimate_pmax(&post, 100_000, &mut ChaCha8Rng::seed_from_u64(seed ^ 1))?;
    SamplerKind::ALL
        .iter()
        .map(|&kind| {
            Ok(CheckResult {
                name: format!("detailed-balance/{}", kind.name()),
                value: detailed_balance_check(&l, b, &pmax, kind)?,
                tolerance: 1e-10,
            })
        })
        .collect()
}

/// Largest relative gap between `det` of the reweighted kernel and
/// `prod p(x_b) * det(L_X)` over every batch.
pub fn reweighting_suite(n: usize, b: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let post = random_posterior(n, seed)?;
    let l = LEnsemble::mutual_information(&post, 1.0)?;
    let pmax = estimate_pmax(&post, 100_000, &mut ChaCha8Rng::seed_from_u64(seed ^ 1))?;
    let lt = l.reweighted(&pmax)?;
    let p = pmax.probabilities();
    let states = n.pow(b as u32);
    let mut worst: f64 = 0.0;
    for code in 0..states {
        let mut idx = Vec::with_capacity(b);
        let mut c = code;
        for _ in 0..b {
            idx.push(c % n);
            c /= n;
        }
        let batch = Batch::new(idx.clone())?;
        let lhs = restricted_logdet(&lt, &batch)?.exp();
        let rhs = idx.iter().map(|&i| p[i]).product::<f64>() * restricted_logdet(&l, &batch)?.exp();
        if lhs != rhs {
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
        }
    }
    Ok(vec![CheckResult {
        name: "reweighting".into(),
        value: worst,
        tolerance: 1e-9,
    }])
}

/// Runs a suite at its standard size.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<CheckResult>> {
    Ok(match suite {
        Suite::Enumeration => enumeration_suite(4, 2, 10_000, 200, seed)?,
        Suite::DetailedBalance => detailed_balance_suite(3, 2, seed)?,
        Suite::Reweighting => reweighting_suite(4, 2, seed)?,
        Suite::All => {
            let mut all = run_suite(Suite::Enumeration, seed)?;
            all.extend(run_suite(Suite::DetailedBalance, seed)?);
            all.extend(run_suite(Suite::Reweighting, seed)?);
            all
        }
    })
}
