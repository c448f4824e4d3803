use std::sync::Arc;

use nalgebra::DMatrix;

use crate::linalg::logdet_sym;
use crate::model::GaussianPosterior;
use crate::{Error, Result};

use super::PmaxEstimate;

/// Ordered batch of grid indices; duplicates are legal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Batch(Vec<usize>);

impl Batch {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::config("a batch needs at least one point"));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub(crate) fn set(&mut self, slot: usize, index: usize) {
        self.0[slot] = index;
    }
}

impl From<Batch> for Vec<usize> {
    fn from(b: Batch) -> Self {
        b.0
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Identity(usize),
    Dense(DMatrix<f64>),
    /// `I + scale * K_t`.
    MutualInformation {
        posterior: GaussianPosterior,
        scale: f64,
    },
    /// `I + scale * G^T G` for an m x N factor `G`.
    LowRank {
        factor: Arc<DMatrix<f64>>,
        scale: f64,
    },
    /// `sqrt(w_i w_j) * L_ij`.
    Reweighted {
        base: Box<LEnsemble>,
        weights: Vec<f64>,
    },
}

/// Symmetric PSD similarity kernel over the grid. Entries are produced on
/// demand, so only batch-sized submatrices are ever materialized.
#[derive(Debug, Clone)]
pub struct LEnsemble {
    repr: Repr,
    lambda: f64,
}

impl LEnsemble {
    pub fn identity(n: usize) -> Self {
        Self {
            repr: Repr::Identity(n),
            lambda: 0.0,
        }
    }

    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::config("L-ensemble must be square"));
        }
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-12 * matrix.amax().max(1.0) {
            return Err(Error::config("L-ensemble must be symmetric"));
        }
        Ok(Self {
            repr: Repr::Dense(matrix),
            lambda: 1.0,
        })
    }

    /// Mutual-information kernel `I + lambda * s^-2 * K_t`.
    pub fn mutual_information(posterior: &GaussianPosterior, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::config("lambda must be non-negative"));
        }
        if lambda == 0.0 {
            return Ok(Self::identity(posterior.len()));
        }
        Ok(Self {
            repr: Repr::MutualInformation {
                posterior: posterior.clone(),
                scale: lambda / posterior.noise_var(),
            },
            lambda,
        })
    }

    /// `I + lambda * s^-2 * G^T G`, the mutual-information kernel of a
    /// posterior covariance given through its factor.
    pub fn low_rank(factor: DMatrix<f64>, noise_var: f64, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::config("lambda must be non-negative"));
        }
        if !(noise_var > 0.0) {
            return Err(Error::config("noise variance must be positive"));
        }
        if lambda == 0.0 {
            return Ok(Self::identity(factor.ncols()));
        }
        Ok(Self {
            repr: Repr::LowRank {
                factor: Arc::new(factor),
                scale: lambda / noise_var,
            },
            lambda,
        })
    }

    /// Quality-reweighted kernel `sqrt(p_i p_j) L_ij`, turning a plain
    /// k-DPP over the result into the `p_max`-reweighted batch distribution.
    pub fn reweighted(&self, pmax: &PmaxEstimate) -> Result<Self> {
        if pmax.len() != self.len() {
            return Err(Error::config("p_max length does not match the kernel"));
        }
        Ok(Self {
            repr: Repr::Reweighted {
                base: Box::new(self.clone()),
                weights: pmax.probabilities().iter().map(|p| p.sqrt()).collect(),
            },
            lambda: self.lambda,
        })
    }

    /// Regularization strength multiplying the data-dependent part.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Identity(n) => *n,
            Repr::Dense(m) => m.nrows(),
            Repr::MutualInformation { posterior, .. } => posterior.len(),
            Repr::LowRank { factor, .. } => factor.ncols(),
            Repr::Reweighted { weights, .. } => weights.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.repr, Repr::Identity(_))
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.slot_entry(i, j, i == j)
    }

    /// Entry for two batch slots holding grid points `i` and `j`. The
    /// regularizing identity belongs to slots, so a duplicated point keeps
    /// its unit diagonal and the restricted kernel stays nonsingular.
    fn slot_entry(&self, i: usize, j: usize, same_slot: bool) -> f64 {
        let delta = if same_slot { 1.0 } else { 0.0 };
        match &self.repr {
            Repr::Identity(_) => delta,
            Repr::Dense(m) => m[(i, j)],
            Repr::MutualInformation { posterior, scale } => delta + scale * posterior.cov(i, j),
            Repr::LowRank { factor, scale } => {
                delta + scale * factor.column(i).dot(&factor.column(j))
            }
            Repr::Reweighted { base, weights } => {
                weights[i] * weights[j] * base.slot_entry(i, j, same_slot)
            }
        }
    }

    /// `L[X, X]` with repeated rows/columns for duplicate indices (plus the
    /// per-slot identity for regularized kernels).
    pub fn submatrix(&self, indices: &[usize]) -> DMatrix<f64> {
        let k = indices.len();
        let mut m = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v = self.slot_entry(indices[a], indices[b], a == b);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.submatrix(&all)
    }

    pub(crate) fn logdet(&self, indices: &[usize]) -> f64 {
        if self.is_identity() {
            return 0.0;
        }
        logdet_sym(&self.submatrix(indices))
    }
}

/// `log det L[X, X]`; `-inf` when the restricted kernel is singular.
pub fn restricted_logdet(l: &LEnsemble, batch: &Batch) -> Result<f64> {
    let n = l.len();
    if let Some(&bad) = batch.indices().iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, size: n });
    }
    Ok(l.logdet(batch.indices()))
}
