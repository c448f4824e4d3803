//! Quadrature Fourier features for the squared-exponential kernel and the
//! Bayesian linear regression built on top of them.
//!
//! The spectral measure of `s * exp(-r^2 / 2l^2)` is `N(0, l^-2 I)`. A
//! tensor Gauss-Hermite rule with nodes `w_j` and weights `c_j` gives
//! `k(x, x') ~= s * sum_j c_j cos(w_j . (x - x'))`, which factorizes into
//! `cos`/`sin` feature pairs. Nodes come in `+w/-w` pairs, so only one half
//! space is kept with doubled weight.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;

use super::{DomainGrid, GpPrior, KernelSpec, Observation};
use crate::linalg::{self, argmax_random_ties};
use crate::{Error, Result};

/// Maximum relative Frobenius error between the feature kernel and the
/// exact kernel accepted at construction.
pub const DEFAULT_KERNEL_AGREEMENT: f64 = 0.05;

const NODE_LADDER: [usize; 14] = [4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256, 384];
const MAX_TOTAL_NODES: usize = 1 << 14;
const MAX_VALIDATION_POINTS: usize = 512;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct FeatureModel {
    grid: Arc<DomainGrid>,
    kernel: KernelSpec,
    phi: Arc<DMatrix<f64>>,
    noise_var: f64,
    nodes_per_dim: usize,
    kernel_error: f64,
}

impl FeatureModel {
    /// Builds the feature map on `grid`. With `nodes_per_dim = None` the node
    /// count is increased until the kernel agreement check passes.
    pub fn new(
        grid: Arc<DomainGrid>,
        kernel: KernelSpec,
        noise_var: f64,
        nodes_per_dim: Option<usize>,
    ) -> Result<Self> {
        kernel.validate()?;
        if !(noise_var > 0.0) {
            return Err(Error::config("noise variance must be positive"));
        }
        // more features than twice the grid size buys nothing over the exact kernel
        let feature_cap = (2 * grid.len()).max(64);
        let candidates: Vec<usize> = match nodes_per_dim {
            Some(0) => return Err(Error::config("need at least one quadrature node")),
            Some(n) => vec![n],
            None => NODE_LADDER
                .iter()
                .copied()
                .filter(|n| n.pow(grid.dim() as u32) <= MAX_TOTAL_NODES.min(feature_cap))
                .collect(),
        };
        let mut last_error = f64::INFINITY;
        for nodes in candidates {
            let phi = feature_matrix(&grid, &kernel, nodes);
            let err = kernel_error(&grid, &kernel, &phi);
            last_error = err;
            if err <= DEFAULT_KERNEL_AGREEMENT {
                return Ok(Self {
                    grid,
                    kernel,
                    phi: Arc::new(phi),
                    noise_var,
                    nodes_per_dim: nodes,
                    kernel_error: err,
                });
            }
        }
        Err(Error::numerical(format!(
            "feature kernel disagrees with the exact kernel (relative error {last_error:.4})"
        )))
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    /// N x m feature matrix (row `i` is the feature vector of point `i`).
    pub fn features(&self) -> &Arc<DMatrix<f64>> {
        &self.phi
    }

    pub fn feature_count(&self) -> usize {
        self.phi.ncols()
    }

    pub fn nodes_per_dim(&self) -> usize {
        self.nodes_per_dim
    }

    /// Relative Frobenius error of `Phi Phi^T` against the exact Gram matrix.
    pub fn kernel_error(&self) -> f64 {
        self.kernel_error
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// GP prior whose covariance is the induced feature kernel.
    pub fn gp_prior(&self) -> Result<GpPrior> {
        GpPrior::low_rank(self.grid.clone(), self.phi.clone(), self.noise_var)
    }

    /// Weight posterior under a `N(0, I)` weight prior. The fit is kept in
    /// the dual form, so its cost grows with the number of observations
    /// rather than with the number of features.
    pub fn fit<'a, I>(&self, history: I) -> Result<FeatureFit>
    where
        I: IntoIterator<Item = &'a Observation>,
    {
        let obs: Vec<Observation> = history.into_iter().copied().collect();
        for o in &obs {
            self.grid.check_index(o.index)?;
        }
        let n = obs.len();
        let rows: Vec<usize> = obs.iter().map(|o| o.index).collect();
        let design = self.phi.select_rows(&rows);
        let mut gram = &design * design.transpose();
        for i in 0..n {
            gram[(i, i)] += self.noise_var;
        }
        let chol = Cholesky::new(gram)
            .ok_or_else(|| Error::numerical("observation Gram matrix is not positive definite"))?;
        if n > 0 {
            let l = chol.l_dirty();
            let (lo, hi) = (0..n).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
                (lo.min(l[(i, i)]), hi.max(l[(i, i)]))
            });
            if (hi / lo).powi(2) > MAX_CONDITION {
                return Err(Error::numerical("observation Gram matrix is ill-conditioned"));
            }
        }
        let cross = self.phi.as_ref() * design.transpose();
        let targets = DVector::from_iterator(n, obs.iter().map(|o| o.y));
        Ok(FeatureFit {
            phi: self.phi.clone(),
            design,
            cross,
            targets,
            chol,
            noise_var: self.noise_var,
        })
    }
}

/// Bayesian linear regression posterior over feature weights.
#[derive(Debug, Clone)]
pub struct FeatureFit {
    phi: Arc<DMatrix<f64>>,
    /// Feature rows of the observed points (n x m).
    design: DMatrix<f64>,
    /// `Phi * design^T` (N x n).
    cross: DMatrix<f64>,
    targets: DVector<f64>,
    /// Factor of `design * design^T + s^2 I`.
    chol: Cholesky<f64, Dyn>,
    noise_var: f64,
}

impl FeatureFit {
    pub fn observation_count(&self) -> usize {
        self.targets.len()
    }

    fn path_for(&self, targets: &DVector<f64>) -> Vec<f64> {
        (&self.cross * self.chol.solve(targets)).data.into()
    }

    pub fn mean_path(&self) -> Vec<f64> {
        self.path_for(&self.targets)
    }

    /// `Phi w` for one draw of the weight posterior.
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        // Matheron's rule: a prior draw corrected towards the data
        let z = linalg::standard_normals(self.phi.ncols(), rng);
        let eps = linalg::standard_normals(self.targets.len(), rng) * self.noise_var.sqrt();
        let residual = &self.targets - &self.design * &z - eps;
        let prior = self.phi.as_ref() * z;
        let mut path: Vec<f64> = prior.data.into();
        for (p, c) in path.iter_mut().zip(self.path_for(&residual)) {
            *p += c;
        }
        path
    }

    /// Mean path after adding `scale * N(0, 1)` to every historical reward.
    pub fn perturbed_mean_path<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> Vec<f64> {
        let noise = linalg::standard_normals(self.targets.len(), rng);
        self.path_for(&(&self.targets + noise * scale))
    }

    /// One PHE draw: argmax of a perturbed refit. Without history the path
    /// is a draw from the weight prior.
    pub fn phe_point<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> usize {
        let path = if self.targets.is_empty() {
            self.sample_path(rng)
        } else {
            self.perturbed_mean_path(scale, rng)
        };
        argmax_random_ties(&path, rng)
    }

    /// `G` (m x N) with `G^T G` equal to the induced posterior covariance
    /// `Phi A^-1 Phi^T`, where `A = I + U^T U / s^2` and `U` is the design.
    ///
    /// With `U U^T = Q diag(e) Q^T` the symmetric root is
    /// `A^-1/2 = I - sum_k h(e_k) u_k u_k^T` for `u_k = U^T q_k` and
    /// `h(e) = (1 - (1 + e/s^2)^-1/2) / e`, written in a form that stays
    /// finite as `e -> 0`.
    pub fn posterior_factor(&self) -> DMatrix<f64> {
        let mut g = self.phi.transpose();
        if self.targets.is_empty() {
            return g;
        }
        let eig = SymmetricEigen::new(&self.design * self.design.transpose());
        for (k, &e) in eig.eigenvalues.iter().enumerate() {
            let root = (1.0 + e.max(0.0) / self.noise_var).sqrt();
            let h = 1.0 / (self.noise_var * root * (root + 1.0));
            let u = self.design.transpose() * eig.eigenvectors.column(k);
            let proj = u.transpose() * &g;
            g -= (u * h) * proj;
        }
        g
    }
}

fn feature_matrix(grid: &DomainGrid, kernel: &KernelSpec, nodes: usize) -> DMatrix<f64> {
    let (z, c) = linalg::gauss_hermite(nodes);
    let d = grid.dim();
    let mut freqs: Vec<(Vec<f64>, f64)> = Vec::new();
    for flat in 0..nodes.pow(d as u32) {
        let mut rest = flat;
        let idx: Vec<usize> = (0..d)
            .map(|_| {
                let i = rest % nodes;
                rest /= nodes;
                i
            })
            .collect();
        let omega: Vec<f64> = idx.iter().map(|&i| z[i] / kernel.lengthscale).collect();
        let weight: f64 = idx.iter().map(|&i| c[i]).product();
        // keep the half space whose first nonzero coordinate is positive
        match omega.iter().find(|w| w.abs() > 1e-14) {
            None => freqs.push((vec![0.0; d], weight)),
            Some(&w) if w > 0.0 => freqs.push((omega, 2.0 * weight)),
            Some(_) => {}
        }
    }
    let cols: usize = freqs
        .iter()
        .map(|(w, _)| if w.iter().all(|x| *x == 0.0) { 1 } else { 2 })
        .sum();
    let mut phi = DMatrix::zeros(grid.len(), cols);
    for (i, x) in grid.points().enumerate() {
        let mut col = 0;
        for (omega, weight) in &freqs {
            let amp = (kernel.output_scale * weight).sqrt();
            let arg: f64 = omega.iter().zip(x).map(|(w, xi)| w * xi).sum();
            phi[(i, col)] = amp * arg.cos();
            col += 1;
            if omega.iter().any(|w| *w != 0.0) {
                phi[(i, col)] = amp * arg.sin();
                col += 1;
            }
        }
    }
    phi
}

fn kernel_error(grid: &DomainGrid, kernel: &KernelSpec, phi: &DMatrix<f64>) -> f64 {
    let n = grid.len();
    let stride = n.div_ceil(MAX_VALIDATION_POINTS).max(1);
    let sample: Vec<usize> = (0..n).step_by(stride).collect();
    let rows = phi.select_rows(&sample);
    let approx = &rows * rows.transpose();
    let (mut num, mut den) = (0.0, 0.0);
    for (a, &i) in sample.iter().enumerate() {
        for (b, &j) in sample.iter().enumerate() {
            let exact = kernel.eval_unchecked(grid.point(i), grid.point(j));
            num += (approx[(a, b)] - exact).powi(2);
            den += exact * exact;
        }
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den).sqrt()
}
