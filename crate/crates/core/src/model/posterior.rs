use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DomainGrid, KernelSpec};
use crate::linalg::{self, forward_solve_packed};
use crate::{Error, Result};

/// Largest acceptable condition number of `K_XX + s^2 I`.
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub index: usize,
    pub y: f64,
}

impl Observation {
    pub fn new(index: usize, y: f64) -> Self {
        Self { index, y }
    }
}

/// Observations segmented by round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    rounds: Vec<Vec<Observation>>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_round(&mut self, round: Vec<Observation>) {
        self.rounds.push(round);
    }

    pub fn rounds(&self) -> &[Vec<Observation>] {
        &self.rounds
    }

    pub fn observations(&self) -> impl Iterator<Item = &Observation> {
        self.rounds.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.rounds.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Prior covariance over the grid.
#[derive(Debug, Clone)]
pub enum PriorCovariance {
    /// Explicit N x N matrix.
    Dense(DMatrix<f64>),
    /// Kernel evaluated lazily on grid coordinates.
    Kernel(KernelSpec),
    /// `Phi Phi^T` for an N x m feature matrix.
    LowRank(Arc<DMatrix<f64>>),
}

/// Square root `R` of the prior covariance, used to draw `R z`.
#[derive(Debug)]
enum SqrtFactor {
    Dense(DMatrix<f64>),
    /// One factor per axis of a tensor grid; the full root is their
    /// Kronecker product (first axis outermost).
    Kronecker(Vec<DMatrix<f64>>),
    LowRank(Arc<DMatrix<f64>>),
}

impl SqrtFactor {
    fn rank(&self) -> usize {
        match self {
            SqrtFactor::Dense(r) => r.ncols(),
            SqrtFactor::Kronecker(rs) => rs.iter().map(|r| r.ncols()).product(),
            SqrtFactor::LowRank(phi) => phi.ncols(),
        }
    }

    fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        match self {
            SqrtFactor::Dense(r) => r * z,
            SqrtFactor::LowRank(phi) => phi.as_ref() * z,
            SqrtFactor::Kronecker(factors) => {
                let mut shape: Vec<usize> = factors.iter().map(|r| r.ncols()).collect();
                let mut buf: Vec<f64> = z.iter().copied().collect();
                for (a, r) in factors.iter().enumerate() {
                    let outer: usize = shape[..a].iter().product();
                    let inner: usize = shape[a + 1..].iter().product();
                    let (rows, cols) = (r.nrows(), r.ncols());
                    let mut out = vec![0.0; outer * rows * inner];
                    for o in 0..outer {
                        for k in 0..cols {
                            let src = &buf[(o * cols + k) * inner..(o * cols + k + 1) * inner];
                            for i in 0..rows {
                                let c = r[(i, k)];
                                if c == 0.0 {
                                    continue;
                                }
                                let dst = &mut out[(o * rows + i) * inner..(o * rows + i + 1) * inner];
                                for (d, s) in dst.iter_mut().zip(src) {
                                    *d += c * s;
                                }
                            }
                        }
                    }
                    shape[a] = rows;
                    buf = out;
                }
                DVector::from_vec(buf)
            }
        }
    }
}

/// Gaussian-process prior restricted to a grid, with homoscedastic noise.
#[derive(Debug)]
pub struct GpPrior {
    grid: Arc<DomainGrid>,
    mean: Vec<f64>,
    covariance: PriorCovariance,
    noise_var: f64,
    root: OnceLock<Result<SqrtFactor>>,
}

impl GpPrior {
    /// Zero-mean prior with a stationary kernel.
    pub fn new(grid: Arc<DomainGrid>, kernel: KernelSpec, noise_var: f64) -> Result<Self> {
        kernel.validate()?;
        let n = grid.len();
        Self::build(grid, vec![0.0; n], PriorCovariance::Kernel(kernel), noise_var)
    }

    /// Prior with an explicit mean vector and covariance matrix.
    pub fn from_moments(
        grid: Arc<DomainGrid>,
        mean: Vec<f64>,
        covariance: DMatrix<f64>,
        noise_var: f64,
    ) -> Result<Self> {
        let n = grid.len();
        if mean.len() != n || covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::config(format!(
                "moments do not match a grid of {n} points"
            )));
        }
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > 1e-12 * covariance.amax().max(1.0) {
            return Err(Error::config("prior covariance must be symmetric"));
        }
        Self::build(grid, mean, PriorCovariance::Dense(covariance), noise_var)
    }

    /// Zero-mean prior with covariance `Phi Phi^T`.
    pub fn low_rank(
        grid: Arc<DomainGrid>,
        features: Arc<DMatrix<f64>>,
        noise_var: f64,
    ) -> Result<Self> {
        if features.nrows() != grid.len() {
            return Err(Error::config("feature matrix rows must match the grid"));
        }
        let n = grid.len();
        Self::build(grid, vec![0.0; n], PriorCovariance::LowRank(features), noise_var)
    }

    fn build(
        grid: Arc<DomainGrid>,
        mean: Vec<f64>,
        covariance: PriorCovariance,
        noise_var: f64,
    ) -> Result<Self> {
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::config("noise variance must be positive"));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::config("prior mean must be finite"));
        }
        Ok(Self {
            grid,
            mean,
            covariance,
            noise_var,
            root: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance_kind(&self) -> &PriorCovariance {
        &self.covariance
    }

    /// Prior covariance entry `K_0[i, j]`.
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        match &self.covariance {
            PriorCovariance::Dense(m) => m[(i, j)],
            PriorCovariance::Kernel(k) => k.eval_unchecked(self.grid.point(i), self.grid.point(j)),
            PriorCovariance::LowRank(phi) => phi.row(i).dot(&phi.row(j)),
        }
    }

    fn cov_row(&self, j: usize) -> Vec<f64> {
        match &self.covariance {
            PriorCovariance::Dense(m) => m.row(j).iter().copied().collect(),
            PriorCovariance::Kernel(k) => {
                let pj = self.grid.point(j);
                self.grid.points().map(|p| k.eval_unchecked(p, pj)).collect()
            }
            PriorCovariance::LowRank(phi) => (phi.as_ref() * phi.row(j).transpose()).data.into(),
        }
    }

    fn root(&self) -> Result<&SqrtFactor> {
        self.root
            .get_or_init(|| self.compute_root())
            .as_ref()
            .map_err(Clone::clone)
    }

    fn compute_root(&self) -> Result<SqrtFactor> {
        match &self.covariance {
            PriorCovariance::Dense(m) => Ok(SqrtFactor::Dense(linalg::psd_sqrt(m)?)),
            PriorCovariance::LowRank(phi) => Ok(SqrtFactor::LowRank(phi.clone())),
            PriorCovariance::Kernel(k) => match self.grid.axes() {
                Some(axes) => {
                    // The squared-exponential kernel factorizes over axes.
                    let mut factors = Vec::with_capacity(axes.len());
                    for (a, axis) in axes.iter().enumerate() {
                        let scale = if a == 0 { k.output_scale } else { 1.0 };
                        let gram = DMatrix::from_fn(axis.len(), axis.len(), |i, j| {
                            let d = axis[i] - axis[j];
                            scale * k.profile(d * d)
                        });
                        factors.push(linalg::psd_sqrt(&gram)?);
                    }
                    Ok(SqrtFactor::Kronecker(factors))
                }
                None => {
                    let n = self.len();
                    let gram = DMatrix::from_fn(n, n, |i, j| self.cov(i, j));
                    Ok(SqrtFactor::Dense(linalg::psd_sqrt(&gram)?))
                }
            },
        }
    }

    /// One joint draw from the prior over the grid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let root = self.root()?;
        let z = linalg::standard_normals(root.rank(), rng);
        let mut f = root.apply(&z);
        for (fi, m) in f.iter_mut().zip(&self.mean) {
            *fi += m;
        }
        Ok(f.data.into())
    }
}

/// Exact GP posterior over a grid.
///
/// Stores the growing Cholesky factor `L` of `K_XX + s^2 I` over the
/// observed points together with `V = L^-1 K_X.`, from which
/// `K_t = K_0 - V^T V` and `mu_t = mu_0 + V^T L^-1 (y - mu_0(X))` follow.
/// Values are immutable: conditioning returns a new posterior.
#[derive(Debug, Clone)]
pub struct GaussianPosterior {
    prior: Arc<GpPrior>,
    observed: Vec<usize>,
    targets: Vec<f64>,
    chol: Vec<Vec<f64>>,
    proj: Vec<Arc<[f64]>>,
    whitened: Vec<f64>,
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl GaussianPosterior {
    pub fn new(prior: Arc<GpPrior>) -> Self {
        let n = prior.len();
        let mean = prior.mean.clone();
        let variance = (0..n).map(|i| prior.cov(i, i).max(0.0)).collect();
        Self {
            prior,
            observed: Vec::new(),
            targets: Vec::new(),
            chol: Vec::new(),
            proj: Vec::new(),
            whitened: Vec::new(),
            mean,
            variance,
        }
    }

    /// Posterior without data for explicit moments.
    pub fn from_moments(
        grid: Arc<DomainGrid>,
        mean: Vec<f64>,
        covariance: DMatrix<f64>,
        noise_var: f64,
    ) -> Result<Self> {
        Ok(Self::new(Arc::new(GpPrior::from_moments(
            grid, mean, covariance, noise_var,
        )?)))
    }

    pub fn prior(&self) -> &Arc<GpPrior> {
        &self.prior
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.prior.grid
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn noise_var(&self) -> f64 {
        self.prior.noise_var
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Diagonal of `K_t`.
    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    pub fn std_dev(&self, i: usize) -> f64 {
        self.variance[i].sqrt()
    }

    /// Indices conditioned on so far (including hallucinations).
    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    /// Entry `K_t[a, b]`.
    pub fn cov(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return self.variance[a];
        }
        self.prior.cov(a, b) - self.proj.iter().map(|v| v[a] * v[b]).sum::<f64>()
    }

    /// `K_t` restricted to `indices`, with rows and columns repeated for
    /// duplicate indices.
    pub fn cov_submatrix(&self, indices: &[usize]) -> DMatrix<f64> {
        let k = indices.len();
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let c = self.cov(indices[i], indices[j]);
                m[(i, j)] = c;
                m[(j, i)] = c;
            }
        }
        m
    }

    /// Dense `K_t` (N x N).
    pub fn covariance(&self) -> DMatrix<f64> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.cov_submatrix(&all)
    }

    /// Posterior given all previous observations plus `obs`.
    pub fn condition(&self, obs: &[Observation]) -> Result<Self> {
        let mut next = self.clone();
        for o in obs {
            next.condition_in_place(o.index, o.y)?;
        }
        Ok(next)
    }

    /// Conditions on a fake observation equal to the current posterior mean.
    pub fn hallucinate(&self, index: usize) -> Result<Self> {
        self.prior.grid.check_index(index)?;
        let y = self.mean[index];
        let mut next = self.clone();
        next.condition_in_place(index, y)?;
        Ok(next)
    }

    /// Rank-one extension of the Cholesky cache.
    pub fn condition_in_place(&mut self, index: usize, y: f64) -> Result<()> {
        self.prior.grid.check_index(index)?;
        if !y.is_finite() {
            return Err(Error::numerical("observation is not finite"));
        }
        let j = index;
        let link: Vec<f64> = self.proj.iter().map(|v| v[j]).collect();
        let pivot_sq = self.variance[j] + self.prior.noise_var;
        if !(pivot_sq > 0.0) {
            return Err(Error::numerical("non-positive Cholesky pivot"));
        }
        let pivot = pivot_sq.sqrt();
        let (lo, hi) = self
            .chol
            .iter()
            .map(|row| row[row.len() - 1])
            .chain(std::iter::once(pivot))
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let condition = (hi / lo).powi(2);
        if condition > MAX_CONDITION {
            return Err(Error::numerical(format!(
                "observation system is ill-conditioned (condition number ~{condition:.3e})"
            )));
        }

        // K_t[j, :] = K_0[j, :] - sum_k link_k V_k
        let mut row = self.prior.cov_row(j);
        for (lk, v) in link.iter().zip(&self.proj) {
            if *lk != 0.0 {
                for (r, vi) in row.iter_mut().zip(v.iter()) {
                    *r -= lk * vi;
                }
            }
        }
        let inv = 1.0 / pivot;
        let v: Vec<f64> = row.iter().map(|r| r * inv).collect();
        let alpha = (y - self.mean[j]) * inv;
        for ((m, var), vi) in self.mean.iter_mut().zip(self.variance.iter_mut()).zip(&v) {
            *m += alpha * vi;
            *var = (*var - vi * vi).max(0.0);
        }

        let mut chol_row = link;
        chol_row.push(pivot);
        self.chol.push(chol_row);
        self.proj.push(v.into());
        self.whitened.push(alpha);
        self.observed.push(j);
        self.targets.push(y);
        Ok(())
    }

    /// Joint draw `f ~ N(mu_t, K_t)` over the whole grid.
    ///
    /// Uses Matheron's rule: a prior draw is corrected by the posterior
    /// update applied to simulated residuals.
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let mut f = self.prior.sample(rng)?;
        if self.observed.is_empty() {
            return Ok(f);
        }
        let noise_sd = self.prior.noise_var.sqrt();
        let resid: Vec<f64> = self
            .observed
            .iter()
            .zip(&self.targets)
            .map(|(&i, &y)| y - f[i] - noise_sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let w = forward_solve_packed(&self.chol, &resid);
        for (wk, v) in w.iter().zip(&self.proj) {
            for (fi, vi) in f.iter_mut().zip(v.iter()) {
                *fi += wk * vi;
            }
        }
        Ok(f)
    }

    /// Smallest eigenvalue of `K_t` relative to `trace / N`; for checks.
    pub fn min_relative_eigenvalue(&self) -> f64 {
        let k = self.covariance();
        let n = k.nrows() as f64;
        let scale = (k.trace() / n).abs().max(f64::MIN_POSITIVE);
        nalgebra::SymmetricEigen::new(k).eigenvalues.min() / scale
    }
}
