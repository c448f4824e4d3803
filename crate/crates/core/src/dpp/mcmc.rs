//! Metropolis-Hastings samplers over ordered batches whose proposals are
//! independent draws from a point distribution `p` that only needs to be
//! sampleable. With `p` as proposal, the `p` factors cancel in the
//! acceptance ratio and the chains target `prod_b p(x_b) * det(L_X)`.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;

use super::{Batch, LEnsemble, PmaxEstimate};
use crate::dpp::sample_pmax_point;
use crate::model::GaussianPosterior;
use crate::{Error, Result};

/// Attempts at finding an initial batch with a nonzero determinant.
pub const MAX_INIT_ATTEMPTS: usize = 100;

/// Source of i.i.d. candidate points.
pub trait PointProposal {
    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize>;
}

/// Thompson-sampling proposals: argmax of a fresh posterior path.
#[derive(Debug, Clone, Copy)]
pub struct ThompsonProposal<'a>(pub &'a GaussianPosterior);

impl PointProposal for ThompsonProposal<'_> {
    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        sample_pmax_point(self.0, rng)
    }
}

/// Proposals from an explicit probability table.
#[derive(Debug, Clone)]
pub struct TabulatedProposal {
    dist: WeightedIndex<f64>,
}

impl TabulatedProposal {
    pub fn new(pmax: &PmaxEstimate) -> Result<Self> {
        let dist = WeightedIndex::new(pmax.probabilities())
            .map_err(|e| Error::config(format!("invalid proposal table: {e}")))?;
        Ok(Self { dist })
    }
}

impl PointProposal for TabulatedProposal {
    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        Ok(self.dist.sample(rng))
    }
}

/// Uniform proposals over a support set.
#[derive(Debug, Clone)]
pub struct UniformProposal {
    support: Vec<usize>,
}

impl UniformProposal {
    pub fn new(support: Vec<usize>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::config("uniform proposal needs a non-empty support"));
        }
        Ok(Self { support })
    }

    pub fn over(n: usize) -> Result<Self> {
        Self::new((0..n).collect())
    }
}

impl PointProposal for UniformProposal {
    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        Ok(self.support[rng.random_range(0..self.support.len())])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    /// Replace one uniformly chosen slot per step (the default sampler).
    SingleSwap,
    /// Redraw the whole batch per step.
    FullBatch,
    /// Lazy single-slot chain with Barker acceptance `d' / (d' + d)`.
    GibbsLi,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [Self::SingleSwap, Self::FullBatch, Self::GibbsLi];

    pub fn name(self) -> &'static str {
        match self {
            Self::SingleSwap => "single-swap",
            Self::FullBatch => "full-batch",
            Self::GibbsLi => "gibbs-li",
        }
    }
}

/// Acceptance probability for moving from a batch with `log det = current`
/// to one with `log det = proposed`.
pub fn acceptance_probability(kind: SamplerKind, current: f64, proposed: f64) -> f64 {
    if proposed == f64::NEG_INFINITY {
        return 0.0;
    }
    if current == f64::NEG_INFINITY {
        return 1.0;
    }
    let log_ratio = proposed - current;
    match kind {
        SamplerKind::SingleSwap | SamplerKind::FullBatch => log_ratio.min(0.0).exp(),
        SamplerKind::GibbsLi => 1.0 / (1.0 + (-log_ratio).exp()),
    }
}

/// Default chain length `max(50 B, ceil(20 B ln N))`.
pub fn default_mcmc_steps(batch_size: usize, domain_size: usize) -> usize {
    let b = batch_size as f64;
    let scaled = (20.0 * b * (domain_size.max(1) as f64).ln()).ceil() as usize;
    (50 * batch_size).max(scaled)
}

fn initial_batch<P, R>(l: &LEnsemble, b: usize, proposal: &P, rng: &mut R) -> Result<(Batch, f64)>
where
    P: PointProposal + ?Sized,
    R: Rng + ?Sized,
{
    for _ in 0..MAX_INIT_ATTEMPTS {
        let indices = (0..b)
            .map(|_| proposal.propose(rng))
            .collect::<Result<Vec<_>>>()?;
        let logdet = l.logdet(&indices);
        if logdet > f64::NEG_INFINITY {
            return Ok((Batch::new(indices)?, logdet));
        }
    }
    Err(Error::numerical(format!(
        "no initial batch with nonzero determinant after {MAX_INIT_ATTEMPTS} attempts"
    )))
}

/// Runs one chain of `steps` transitions and returns its final state.
pub fn run_sampler<P, R>(
    kind: SamplerKind,
    l: &LEnsemble,
    b: usize,
    steps: usize,
    proposal: &P,
    rng: &mut R,
) -> Result<Batch>
where
    P: PointProposal + ?Sized,
    R: Rng + ?Sized,
{
    if b == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    let (mut batch, mut logdet) = initial_batch(l, b, proposal, rng)?;
    let mut scratch = batch.indices().to_vec();
    for _ in 0..steps {
        match kind {
            SamplerKind::FullBatch => {
                for slot in scratch.iter_mut() {
                    *slot = proposal.propose(rng)?;
                }
            }
            SamplerKind::SingleSwap | SamplerKind::GibbsLi => {
                if kind == SamplerKind::GibbsLi && !rng.random_bool(0.5) {
                    continue;
                }
                let slot = rng.random_range(0..b);
                let candidate = proposal.propose(rng)?;
                if candidate == batch.indices()[slot] {
                    continue;
                }
                scratch.copy_from_slice(batch.indices());
                scratch[slot] = candidate;
            }
        }
        let proposed = l.logdet(&scratch);
        let alpha = acceptance_probability(kind, logdet, proposed);
        if alpha >= 1.0 || (alpha > 0.0 && rng.random::<f64>() < alpha) {
            for (slot, &i) in scratch.iter().enumerate() {
                batch.set(slot, i);
            }
            logdet = proposed;
        }
    }
    Ok(batch)
}

/// Single-swap chain with Thompson-sampling proposals.
pub fn mcmc_single_swap<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    l: &LEnsemble,
    b: usize,
    steps: usize,
    rng: &mut R,
) -> Result<Batch> {
    run_sampler(SamplerKind::SingleSwap, l, b, steps, &ThompsonProposal(posterior), rng)
}

/// Full-batch chain with Thompson-sampling proposals.
pub fn mcmc_full_batch<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    l: &LEnsemble,
    b: usize,
    steps: usize,
    rng: &mut R,
) -> Result<Batch> {
    run_sampler(SamplerKind::FullBatch, l, b, steps, &ThompsonProposal(posterior), rng)
}

/// Lazy Barker chain with Thompson-sampling proposals.
pub fn mcmc_gibbs_li<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    l: &LEnsemble,
    b: usize,
    steps: usize,
    rng: &mut R,
) -> Result<Batch> {
    run_sampler(SamplerKind::GibbsLi, l, b, steps, &ThompsonProposal(posterior), rng)
}
