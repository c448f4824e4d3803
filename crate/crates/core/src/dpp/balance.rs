//! Closed-form one-step transition kernels of the batch samplers, used to
//! check detailed balance against the enumerated target.

use super::exact::decode;
use super::mcmc::{acceptance_probability, SamplerKind};
use super::{LEnsemble, PmaxEstimate};
use crate::{Error, Result};

/// Largest state space for which all transition pairs are enumerated.
const MAX_BALANCE_STATES: usize = 2_000;

fn off_diagonal(kind: SamplerKind, l: &LEnsemble, p: &[f64], from: &[usize], to: &[usize]) -> f64 {
    let b = from.len();
    let proposal = match kind {
        SamplerKind::FullBatch => to.iter().map(|&i| p[i]).product::<f64>(),
        SamplerKind::SingleSwap | SamplerKind::GibbsLi => {
            let mut diff = from.iter().zip(to).enumerate().filter(|(_, (a, c))| a != c);
            let Some((_, (_, &y))) = diff.next() else {
                return 0.0;
            };
            if diff.next().is_some() {
                return 0.0;
            }
            let gate = if kind == SamplerKind::GibbsLi { 0.5 } else { 1.0 };
            gate * p[y] / b as f64
        }
    };
    if proposal == 0.0 {
        return 0.0;
    }
    proposal * acceptance_probability(kind, l.logdet(from), l.logdet(to))
}

/// Probability that one step of `kind`, proposing from the exact table
/// `pmax`, moves the chain from batch `from` to batch `to`.
///
/// For `from == to` this is the holding probability, which requires
/// summing over every other batch.
pub fn transition_probability(
    kind: SamplerKind,
    l: &LEnsemble,
    pmax: &PmaxEstimate,
    from: &[usize],
    to: &[usize],
) -> Result<f64> {
    let n = l.len();
    if pmax.len() != n || from.len() != to.len() || from.is_empty() {
        return Err(Error::config("mismatched kernel, p_max or batch sizes"));
    }
    for &i in from.iter().chain(to) {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, size: n });
        }
    }
    let p = pmax.probabilities();
    if from != to {
        return Ok(off_diagonal(kind, l, p, from, to));
    }
    let b = from.len();
    let states = (n as u128).checked_pow(b as u32).unwrap_or(u128::MAX);
    if states > super::MAX_ENUMERATION {
        return Err(Error::TooLarge {
            states,
            limit: super::MAX_ENUMERATION,
        });
    }
    let mut other = vec![0; b];
    let mut leave = 0.0;
    for code in 0..states as usize {
        decode(code, n, &mut other);
        if other != from {
            leave += off_diagonal(kind, l, p, from, &other);
        }
    }
    Ok((1.0 - leave).max(0.0))
}

/// Largest relative violation of `Q(X) T(X'|X) = Q(X') T(X|X')` over all
/// pairs of distinct batches, where `Q` is the exact target.
pub fn detailed_balance_check(
    l: &LEnsemble,
    b: usize,
    pmax: &PmaxEstimate,
    kind: SamplerKind,
) -> Result<f64> {
    let n = l.len();
    let target = super::exact_batch_distribution(l, b, pmax)?;
    let states = target.probabilities().len();
    if states > MAX_BALANCE_STATES {
        return Err(Error::TooLarge {
            states: states as u128,
            limit: MAX_BALANCE_STATES as u128,
        });
    }
    let p = pmax.probabilities();
    let q = target.probabilities();
    let mut x = vec![0; b];
    let mut y = vec![0; b];
    let mut worst: f64 = 0.0;
    for i in 0..states {
        decode(i, n, &mut x);
        for j in (i + 1)..states {
            decode(j, n, &mut y);
            let forward = q[i] * off_diagonal(kind, l, p, &x, &y);
            let backward = q[j] * off_diagonal(kind, l, p, &y, &x);
            let scale = forward.abs().max(backward.abs());
            if scale > 0.0 {
                worst = worst.max((forward - backward).abs() / scale);
            }
        }
    }
    Ok(worst)
}
