use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::argmax_lowest;
use crate::model::{DomainGrid, GpPrior, KernelSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    /// A draw from the model's GP prior on `[0, 1]^d`.
    GpSample,
    Rosenbrock,
    StyblinskiTang,
    Michalewicz,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::GpSample => "gp-sample",
            Self::Rosenbrock => "rosenbrock",
            Self::StyblinskiTang => "styblinski-tang",
            Self::Michalewicz => "michalewicz",
        }
    }

    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            Self::GpSample => (0.0, 1.0),
            Self::Rosenbrock => (-2.0, 2.0),
            Self::StyblinskiTang => (-5.0, 5.0),
            Self::Michalewicz => (0.0, PI),
        }
    }
}

/// Default points per axis: 1024 in one dimension, then coarser tensor grids.
pub fn default_resolution(dim: usize) -> usize {
    match dim {
        1 => 1024,
        2 => 64,
        3 => 16,
        _ => 8,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    #[serde(default = "one")]
    pub dim: usize,
    /// One `(lo, hi)` per axis; defaults to the usual box for the function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Points per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    /// Rescale named functions to zero mean and unit SD over the grid.
    #[serde(default = "yes")]
    pub standardize: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_noise_sd() -> f64 {
    0.01
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, dim: usize) -> Self {
        Self {
            kind,
            dim,
            bounds: None,
            resolution: None,
            noise_sd: default_noise_sd(),
            standardize: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.dim) {
            return Err(Error::config("objective dimension must be between 1 and 4"));
        }
        if self.kind == ObjectiveKind::Rosenbrock && self.dim < 2 {
            return Err(Error::config("rosenbrock needs at least two dimensions"));
        }
        if let Some(b) = &self.bounds {
            if b.len() != self.dim {
                return Err(Error::config("need one bound pair per dimension"));
            }
        }
        if self.resolution == Some(0) {
            return Err(Error::config("resolution must be positive"));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::config("noise_sd must be non-negative"));
        }
        Ok(())
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.bounds
            .clone()
            .unwrap_or_else(|| vec![self.kind.default_bounds(); self.dim])
    }

    pub fn resolution(&self) -> usize {
        self.resolution.unwrap_or_else(|| default_resolution(self.dim))
    }

    pub fn grid(&self) -> Result<DomainGrid> {
        self.validate()?;
        DomainGrid::uniform(&self.bounds(), &vec![self.resolution(); self.dim])
    }
}

/// Raw value of a named benchmark (a minimization problem).
pub fn eval_objective(kind: ObjectiveKind, x: &[f64]) -> Result<f64> {
    match kind {
        ObjectiveKind::GpSample => Err(Error::config(
            "gp-sample objectives are only defined on their grid",
        )),
        ObjectiveKind::Rosenbrock => {
            if x.len() < 2 {
                return Err(Error::config("rosenbrock needs at least two dimensions"));
            }
            Ok(x.windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
                .sum())
        }
        ObjectiveKind::StyblinskiTang => {
            Ok(0.5 * x.iter().map(|v| v.powi(4) - 16.0 * v * v + 5.0 * v).sum::<f64>())
        }
        ObjectiveKind::Michalewicz => {
            let power = 2 * x.len() as i32;
            Ok(-x
                .iter()
                .enumerate()
                .map(|(i, v)| v.sin() * ((i + 1) as f64 * v * v / PI).sin().powi(power))
                .sum::<f64>())
        }
    }
}

/// Joint prior draw of a GP over the grid.
pub fn sample_gp_objective<R: Rng + ?Sized>(
    kernel: KernelSpec,
    grid: Arc<DomainGrid>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    // the noise level plays no role in prior draws
    GpPrior::new(grid, kernel, 1.0)?.sample(rng)
}

/// `f(x_i) + N(0, sd^2)`.
pub fn observe<R: Rng + ?Sized>(truth: &[f64], index: usize, sd: f64, rng: &mut R) -> Result<f64> {
    let f = *truth.get(index).ok_or(Error::IndexOutOfRange {
        index,
        size: truth.len(),
    })?;
    if sd == 0.0 {
        return Ok(f);
    }
    let z: f64 = rng.sample(rand_distr::StandardNormal);
    Ok(f + sd * z)
}

/// A concrete maximization problem on a grid.
#[derive(Debug, Clone)]
pub struct Objective {
    grid: Arc<DomainGrid>,
    truth: Vec<f64>,
    best_index: usize,
    noise_sd: f64,
}

impl Objective {
    pub fn from_truth(grid: Arc<DomainGrid>, truth: Vec<f64>, noise_sd: f64) -> Result<Self> {
        if truth.len() != grid.len() {
            return Err(Error::config("truth vector does not match the grid"));
        }
        if truth.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("objective has non-finite values"));
        }
        let best_index = argmax_lowest(&truth);
        Ok(Self {
            grid,
            truth,
            best_index,
            noise_sd,
        })
    }

    /// Builds the objective. Named functions are negated (and standardized
    /// if requested) so that larger is better; `gp-sample` draws from the
    /// model kernel.
    pub fn instantiate<R: Rng + ?Sized>(
        spec: &ObjectiveSpec,
        kernel: KernelSpec,
        rng: &mut R,
    ) -> Result<Self> {
        let grid = Arc::new(spec.grid()?);
        let truth = match spec.kind {
            ObjectiveKind::GpSample => sample_gp_objective(kernel, grid.clone(), rng)?,
            kind => {
                let raw = grid
                    .points()
                    .map(|x| eval_objective(kind, x))
                    .collect::<Result<Vec<f64>>>()?;
                let (shift, scale) = if spec.standardize {
                    standardization(&raw)
                } else {
                    (0.0, 1.0)
                };
                raw.iter().map(|v| -(v - shift) / scale).collect()
            }
        };
        Self::from_truth(grid, truth, spec.noise_sd)
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    pub fn best_index(&self) -> usize {
        self.best_index
    }

    pub fn best_value(&self) -> f64 {
        self.truth[self.best_index]
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn observe<R: Rng + ?Sized>(&self, index: usize, rng: &mut R) -> Result<f64> {
        observe(&self.truth, index, self.noise_sd, rng)
    }
}

fn standardization(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}
