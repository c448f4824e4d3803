use rand::Rng;

use crate::dpp::{
    run_sampler, sample_pmax_point, Batch, LEnsemble, PointProposal, SamplerKind,
    ThompsonProposal, UniformProposal,
};
use crate::linalg::argmax_lowest;
use crate::model::{FeatureFit, GaussianPosterior};
use crate::{Error, Result};

fn check_batch(b: usize) -> Result<()> {
    if b == 0 {
        Err(Error::config("batch size must be at least 1"))
    } else {
        Ok(())
    }
}

fn hallucinate_in_place(posterior: &mut GaussianPosterior, index: usize) -> Result<()> {
    let y = posterior.mean()[index];
    posterior.condition_in_place(index, y)
}

fn ucb(posterior: &GaussianPosterior, beta: f64) -> Vec<f64> {
    let scale = beta.max(0.0).sqrt();
    posterior
        .mean()
        .iter()
        .zip(posterior.variance())
        .map(|(m, v)| m + scale * v.max(0.0).sqrt())
        .collect()
}

/// Points whose UCB reaches the best LCB: a high-probability region for
/// the maximizer. Never empty, since the UCB argmax always qualifies.
pub fn maximizer_region(posterior: &GaussianPosterior, beta: f64) -> Vec<usize> {
    let scale = beta.max(0.0).sqrt();
    let sd: Vec<f64> = posterior.variance().iter().map(|v| v.max(0.0).sqrt()).collect();
    let mean = posterior.mean();
    let best_lcb = mean
        .iter()
        .zip(&sd)
        .map(|(m, s)| m - scale * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let region: Vec<usize> = (0..mean.len())
        .filter(|&i| mean[i] + scale * sd[i] >= best_lcb)
        .collect();
    assert!(!region.is_empty(), "UCB argmax lies in its own region");
    region
}

/// Batched Thompson sampling: `b` independent posterior-path argmaxes.
pub fn propose_ts<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    b: usize,
    rng: &mut R,
) -> Result<Batch> {
    check_batch(b)?;
    let indices = (0..b)
        .map(|_| sample_pmax_point(posterior, rng))
        .collect::<Result<Vec<_>>>()?;
    Batch::new(indices)
}

/// Thompson sampling with a hallucinated observation after every slot.
pub fn propose_hal_ts<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    b: usize,
    rng: &mut R,
) -> Result<Batch> {
    check_batch(b)?;
    let mut current = posterior.clone();
    let mut indices = Vec::with_capacity(b);
    for slot in 0..b {
        let i = sample_pmax_point(&current, rng)?;
        indices.push(i);
        if slot + 1 < b {
            hallucinate_in_place(&mut current, i)?;
        }
    }
    Batch::new(indices)
}

/// GP-BUCB: UCB argmax on the hallucinated posterior, slot by slot.
pub fn propose_gp_bucb(posterior: &GaussianPosterior, b: usize, beta: f64) -> Result<Batch> {
    check_batch(b)?;
    let mut current = posterior.clone();
    let mut indices = Vec::with_capacity(b);
    for slot in 0..b {
        let i = argmax_lowest(&ucb(&current, beta));
        indices.push(i);
        if slot + 1 < b {
            hallucinate_in_place(&mut current, i)?;
        }
    }
    Batch::new(indices)
}

/// GP-UCB-PE: UCB argmax first, then maximum hallucinated uncertainty
/// inside the maximizer region.
pub fn propose_ucb_pe(posterior: &GaussianPosterior, b: usize, beta: f64) -> Result<Batch> {
    check_batch(b)?;
    let region = maximizer_region(posterior, beta);
    let first = argmax_lowest(&ucb(posterior, beta));
    let mut indices = vec![first];
    let mut current = posterior.clone();
    for _ in 1..b {
        hallucinate_in_place(&mut current, *indices.last().unwrap())?;
        let var = current.variance();
        let mut best = region[0];
        for &i in &region[1..] {
            if var[i] > var[best] {
                best = i;
            }
        }
        indices.push(best);
    }
    Batch::new(indices)
}

/// UCB argmax followed by a `(b-1)`-DPP over the maximizer region with the
/// regularized mutual-information kernel.
pub fn propose_ucb_dpp_sample<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    b: usize,
    beta: f64,
    steps: usize,
    rng: &mut R,
) -> Result<Batch> {
    check_batch(b)?;
    let first = argmax_lowest(&ucb(posterior, beta));
    if b == 1 {
        return Batch::new(vec![first]);
    }
    let region = maximizer_region(posterior, beta);
    let l = LEnsemble::mutual_information(posterior, 1.0)?;
    let proposal = UniformProposal::new(region)?;
    let tail = run_sampler(SamplerKind::SingleSwap, &l, b - 1, steps, &proposal, rng)?;
    let mut indices = vec![first];
    indices.extend(tail.into_inner());
    Batch::new(indices)
}

/// DPP-TS: batches drawn with probability proportional to
/// `prod p_max(x_b) * det(I + lambda s^-2 K_t)_X` by single-swap MCMC.
pub fn propose_dpp_ts<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    b: usize,
    lambda: f64,
    steps: usize,
    rng: &mut R,
) -> Result<Batch> {
    check_batch(b)?;
    let l = LEnsemble::mutual_information(posterior, lambda)?;
    if l.is_identity() {
        // every move would be accepted; the target is the TS product
        return propose_ts(posterior, b, rng);
    }
    run_sampler(SamplerKind::SingleSwap, &l, b, steps, &ThompsonProposal(posterior), rng)
}

/// DPP-TS-alt: slot one by plain TS, the remaining slots by DPP-TS with the
/// kernel of the posterior conditioned on slot one.
pub fn propose_dpp_ts_alt<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    b: usize,
    lambda: f64,
    steps: usize,
    rng: &mut R,
) -> Result<Batch> {
    check_batch(b)?;
    let first = sample_pmax_point(posterior, rng)?;
    let mut indices = vec![first];
    if b > 1 {
        let conditioned = posterior.hallucinate(first)?;
        let l = LEnsemble::mutual_information(&conditioned, lambda)?;
        let tail = if l.is_identity() {
            propose_ts(posterior, b - 1, rng)?
        } else {
            let proposal = ThompsonProposal(posterior);
            run_sampler(SamplerKind::SingleSwap, &l, b - 1, steps, &proposal, rng)?
        };
        indices.extend(tail.into_inner());
    }
    Batch::new(indices)
}

/// Proposals from perturbed-history refits of a feature model.
#[derive(Debug, Clone, Copy)]
pub struct PheProposal<'a> {
    pub fit: &'a FeatureFit,
    pub scale: f64,
}

impl PointProposal for PheProposal<'_> {
    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        Ok(self.fit.phe_point(self.scale, rng))
    }
}

/// Perturbed-history exploration: each slot is the mean argmax after
/// adding fresh `a * N(0, 1)` noise to every historical reward.
pub fn propose_phe<R: Rng + ?Sized>(fit: &FeatureFit, b: usize, a: f64, rng: &mut R) -> Result<Batch> {
    check_batch(b)?;
    let proposal = PheProposal { fit, scale: a };
    let indices = (0..b)
        .map(|_| proposal.propose(rng))
        .collect::<Result<Vec<_>>>()?;
    Batch::new(indices)
}

/// PHE draws diversified by the mutual-information kernel of the feature
/// model's posterior.
pub fn propose_dpp_phe<R: Rng + ?Sized>(
    fit: &FeatureFit,
    noise_var: f64,
    b: usize,
    a: f64,
    lambda: f64,
    steps: usize,
    rng: &mut R,
) -> Result<Batch> {
    check_batch(b)?;
    if lambda == 0.0 {
        return propose_phe(fit, b, a, rng);
    }
    let l = LEnsemble::low_rank(fit.posterior_factor(), noise_var, lambda)?;
    let proposal = PheProposal { fit, scale: a };
    run_sampler(SamplerKind::SingleSwap, &l, b, steps, &proposal, rng)
}

/// Uniform exploration over `n` grid points.
pub fn propose_uniform<R: Rng + ?Sized>(n: usize, b: usize, rng: &mut R) -> Result<Batch> {
    check_batch(b)?;
    if n == 0 {
        return Err(Error::config("empty domain"));
    }
    Batch::new((0..b).map(|_| rng.random_range(0..n)).collect())
}

/// Pure DPP exploration: the `b`-DPP with kernel `I + s^-2 K_t` sampled by
/// MCMC with uniform proposals.
pub fn propose_pure_dpp<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    b: usize,
    steps: usize,
    rng: &mut R,
) -> Result<Batch> {
    check_batch(b)?;
    let l = LEnsemble::mutual_information(posterior, 1.0)?;
    let proposal = UniformProposal::over(posterior.len())?;
    run_sampler(SamplerKind::SingleSwap, &l, b, steps, &proposal, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DomainGrid;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn posterior(mean: Vec<f64>, cov: DMatrix<f64>) -> GaussianPosterior {
        let grid = Arc::new(DomainGrid::unit_interval(mean.len()).unwrap());
        GaussianPosterior::from_moments(grid, mean, cov, 0.1).unwrap()
    }

    fn degenerate() -> GaussianPosterior {
        posterior(vec![0.1, 0.7, 0.3], DMatrix::zeros(3, 3))
    }

    #[test]
    fn degenerate_posterior_repeats_mean_argmax() {
        let p = degenerate();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let all = |b: Batch| b.indices().iter().all(|&i| i == 1);
        assert!(all(propose_ts(&p, 4, &mut rng).unwrap()));
        assert!(all(propose_hal_ts(&p, 4, &mut rng).unwrap()));
        assert!(all(propose_gp_bucb(&p, 4, 2.0).unwrap()));
        assert!(all(propose_ucb_pe(&p, 4, 2.0).unwrap()));
        assert!(all(propose_dpp_ts(&p, 4, 1.0, 30, &mut rng).unwrap()));
        assert!(all(propose_dpp_ts_alt(&p, 4, 1.0, 30, &mut rng).unwrap()));
    }

    #[test]
    fn zero_beta_bucb_follows_hallucinated_mean() {
        let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let p = posterior(vec![0.0, 1.0, 0.5], cov);
        let b = propose_gp_bucb(&p, 3, 0.0).unwrap();
        // hallucination never moves the mean, so the mean argmax repeats
        assert_eq!(b.indices(), &[1, 1, 1]);
    }

    #[test]
    fn bucb_trace_by_hand() {
        // mean (0, 0.2, 0.1), unit variances, independent, s^2 = 0.1, beta = 1
        // slot 1: ucb = (1, 1.2, 1.1) -> 1; variance at 1 becomes 0.1/1.1
        // slot 2: ucb = (1, 0.2 + 0.3015, 1.1) -> 2
        // slot 3: ucb = (1, 0.5015, 0.1 + 0.3015) -> 0
        let p = posterior(vec![0.0, 0.2, 0.1], DMatrix::identity(3, 3));
        assert_eq!(propose_gp_bucb(&p, 3, 1.0).unwrap().indices(), &[1, 2, 0]);
    }

    #[test]
    fn ucb_pe_trace_by_hand() {
        // sd = 1, beta = 1: ucb = mean + 1, lcb = mean - 1, best lcb = 0.5
        // region = {mean >= -0.5} = {0, 1, 3}; index 2 (mean -1) is excluded
        let p = posterior(vec![0.0, 1.5, -1.0, 0.2], DMatrix::identity(4, 4));
        assert_eq!(maximizer_region(&p, 1.0), vec![0, 1, 3]);
        // slot 1 = UCB argmax 1; then max hallucinated variance in region,
        // lowest index first: 0, then 3, then the least-visited again
        let b = propose_ucb_pe(&p, 4, 1.0).unwrap();
        assert_eq!(b.indices(), &[1, 0, 3, 0]);
        let zero = propose_ucb_pe(&p, 2, 0.0).unwrap();
        assert_eq!(zero.indices(), &[1, 1]);
    }

    #[test]
    fn single_slot_reductions() {
        let p = posterior(vec![0.0, 0.2, 0.1], DMatrix::identity(3, 3));
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let ucb_only = propose_ucb_dpp_sample(&p, 1, 1.0, 10, &mut a).unwrap();
        assert_eq!(ucb_only.indices(), propose_gp_bucb(&p, 1, 1.0).unwrap().indices());
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let x = propose_dpp_ts_alt(&p, 1, 1.0, 10, &mut a).unwrap();
        let y = propose_ts(&p, 1, &mut b).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn uniform_single_point_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(propose_uniform(1, 3, &mut rng).unwrap().indices(), &[0, 0, 0]);
    }

    #[test]
    fn every_batch_has_requested_size() {
        let p = posterior(vec![0.0, 0.2, 0.1, 0.4], DMatrix::identity(4, 4) * 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for b in 1..4 {
            assert_eq!(propose_pure_dpp(&p, b, 20, &mut rng).unwrap().len(), b);
            assert_eq!(propose_ucb_dpp_sample(&p, b, 2.0, 20, &mut rng).unwrap().len(), b);
            assert_eq!(propose_hal_ts(&p, b, &mut rng).unwrap().len(), b);
        }
        assert!(propose_ts(&p, 0, &mut rng).is_err());
    }
}
