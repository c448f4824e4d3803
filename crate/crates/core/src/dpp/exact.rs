use std::collections::HashMap;

use super::{LEnsemble, PmaxEstimate};
use crate::{Error, Result};

/// Largest number of ordered batches the enumeration oracle will visit.
pub const MAX_ENUMERATION: u128 = 1_000_000;

/// Probability table over all ordered batches in `{0..n}^b`. Batches are
/// indexed lexicographically (slot 0 most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchDistribution {
    n: usize,
    b: usize,
    probs: Vec<f64>,
}

impl BatchDistribution {
    fn state_count(n: usize, b: usize) -> Result<usize> {
        let states = (n as u128).checked_pow(b as u32).unwrap_or(u128::MAX);
        if states > MAX_ENUMERATION {
            return Err(Error::TooLarge {
                states,
                limit: MAX_ENUMERATION,
            });
        }
        Ok(states as usize)
    }

    /// Normalizes non-negative log-weights; `-inf` entries get probability 0.
    pub fn from_log_weights<F>(n: usize, b: usize, mut log_weight: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> f64,
    {
        if n == 0 || b == 0 {
            return Err(Error::config("enumeration needs n >= 1 and b >= 1"));
        }
        let states = Self::state_count(n, b)?;
        let mut batch = vec![0usize; b];
        let mut logs = Vec::with_capacity(states);
        for code in 0..states {
            decode(code, n, &mut batch);
            logs.push(log_weight(&batch));
        }
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::numerical("every batch has zero weight"));
        }
        let mut probs: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(Self { n, b, probs })
    }

    /// Empirical distribution of sampled batches.
    pub fn from_samples<'a, I>(n: usize, b: usize, samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let states = Self::state_count(n, b)?;
        let mut probs = vec![0.0; states];
        let mut count = 0usize;
        for s in samples {
            if s.len() != b || s.iter().any(|&i| i >= n) {
                return Err(Error::config("sample does not fit the enumeration shape"));
            }
            probs[encode(s, n)] += 1.0;
            count += 1;
        }
        if count == 0 {
            return Err(Error::config("no samples"));
        }
        probs.iter_mut().for_each(|p| *p /= count as f64);
        Ok(Self { n, b, probs })
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    pub fn batch_size(&self) -> usize {
        self.b
    }

    pub fn prob(&self, batch: &[usize]) -> f64 {
        assert_eq!(batch.len(), self.b, "batch size mismatch");
        self.probs[encode(batch, self.n)]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(code, &p)| {
            let mut batch = vec![0; self.b];
            decode(code, self.n, &mut batch);
            (batch, p)
        })
    }

    /// Marginal distribution of one slot.
    pub fn slot_marginal(&self, slot: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for (batch, p) in self.iter() {
            m[batch[slot]] += p;
        }
        m
    }

    /// Marginal over unordered multisets (sorted batches).
    pub fn multiset_marginal(&self) -> HashMap<Vec<usize>, f64> {
        let mut m = HashMap::new();
        for (mut batch, p) in self.iter() {
            batch.sort_unstable();
            *m.entry(batch).or_insert(0.0) += p;
        }
        m
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        assert_eq!((self.n, self.b), (other.n, other.b), "shape mismatch");
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

pub(super) fn decode(mut code: usize, n: usize, batch: &mut [usize]) {
    for slot in (0..batch.len()).rev() {
        batch[slot] = code % n;
        code /= n;
    }
}

pub(super) fn encode(batch: &[usize], n: usize) -> usize {
    batch.iter().fold(0, |acc, &i| acc * n + i)
}

/// Exact batch distribution `prod_b p(x_b) * det(L_X)` over all ordered
/// batches. This is the enumeration ground truth for sampler tests.
pub fn exact_batch_distribution(
    l: &LEnsemble,
    b: usize,
    pmax: &PmaxEstimate,
) -> Result<BatchDistribution> {
    let n = l.len();
    if pmax.len() != n {
        return Err(Error::config("p_max length does not match the kernel"));
    }
    let log_p: Vec<f64> = pmax.probabilities().iter().map(|p| p.ln()).collect();
    let mut sorted = vec![0; b];
    BatchDistribution::from_log_weights(n, b, |batch| {
        // weights are evaluated on the sorted batch so that permutations of
        // a multiset get bit-identical probabilities
        sorted.copy_from_slice(batch);
        sorted.sort_unstable();
        let lp: f64 = sorted.iter().map(|&i| log_p[i]).sum();
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp + l.logdet(&sorted)
    })
}
