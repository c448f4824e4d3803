use rand::Rng;

use crate::linalg::argmax_random_ties;
use crate::model::GaussianPosterior;
use crate::{Error, Result};

/// Empirical distribution of the posterior-sample argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct PmaxEstimate {
    probabilities: Vec<f64>,
    draws: u64,
}

impl PmaxEstimate {
    pub fn from_probabilities(probabilities: Vec<f64>, draws: u64) -> Result<Self> {
        if probabilities.is_empty() || draws == 0 {
            return Err(Error::config("p_max needs a non-empty support and draws >= 1"));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::config("p_max entries must be non-negative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!("p_max sums to {total}, not 1")));
        }
        Ok(Self {
            probabilities,
            draws,
        })
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let draws: u64 = counts.iter().sum();
        if draws == 0 {
            return Err(Error::config("p_max needs at least one draw"));
        }
        let probabilities = counts.iter().map(|&c| c as f64 / draws as f64).collect();
        Self::from_probabilities(probabilities, draws)
    }

    /// Uniform distribution over `n` points.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_counts(&vec![1; n])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// One Thompson-sampling draw: argmax of a joint posterior path.
pub fn sample_pmax_point<R: Rng + ?Sized>(posterior: &GaussianPosterior, rng: &mut R) -> Result<usize> {
    let path = posterior.sample_path(rng)?;
    Ok(argmax_random_ties(&path, rng))
}

/// Monte-Carlo estimate of `p_max` from `draws` independent paths.
pub fn estimate_pmax<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    draws: u64,
    rng: &mut R,
) -> Result<PmaxEstimate> {
    if draws == 0 {
        return Err(Error::config("estimate_pmax needs at least one draw"));
    }
    let mut counts = vec![0u64; posterior.len()];
    for _ in 0..draws {
        counts[sample_pmax_point(posterior, rng)?] += 1;
    }
    PmaxEstimate::from_counts(&counts)
}
