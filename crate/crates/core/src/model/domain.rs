use crate::{Error, Result};

/// Finite set of evaluation points. The index of a point is its identity
/// everywhere else in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGrid {
    dim: usize,
    coords: Vec<f64>,
    /// Per-axis coordinates when the grid is a full tensor product
    /// (row-major, last axis fastest).
    axes: Option<Vec<Vec<f64>>>,
}

impl DomainGrid {
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::config("a domain needs at least one point"))?;
        if dim == 0 {
            return Err(Error::config("points must have at least one coordinate"));
        }
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::config(format!(
                "dimension mismatch: expected {dim}, found {}",
                bad.len()
            )));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::config("grid coordinates must be finite"));
        }
        let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
        sorted.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("grid points must be distinct"));
        }
        Ok(Self {
            dim,
            coords: points.into_iter().flatten().collect(),
            axes: None,
        })
    }

    /// Uniform tensor grid with `per_axis[a]` points spanning `bounds[a]`
    /// (inclusive endpoints).
    pub fn uniform(bounds: &[(f64, f64)], per_axis: &[usize]) -> Result<Self> {
        if bounds.is_empty() || bounds.len() != per_axis.len() {
            return Err(Error::config(
                "uniform grid needs one resolution per bounded axis",
            ));
        }
        let mut axes = Vec::with_capacity(bounds.len());
        for (&(lo, hi), &n) in bounds.iter().zip(per_axis) {
            if n == 0 || !(lo.is_finite() && hi.is_finite()) || (n > 1 && hi <= lo) {
                return Err(Error::config(format!(
                    "invalid axis [{lo}, {hi}] with {n} points"
                )));
            }
            let axis: Vec<f64> = if n == 1 {
                vec![lo]
            } else {
                let step = (hi - lo) / (n - 1) as f64;
                (0..n).map(|i| lo + step * i as f64).collect()
            };
            axes.push(axis);
        }
        let dim = axes.len();
        let total: usize = per_axis.iter().product();
        let mut coords = Vec::with_capacity(total * dim);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            coords.extend(idx.iter().zip(&axes).map(|(&i, axis)| axis[i]));
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < axes[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(Self {
            dim,
            coords,
            axes: Some(axes),
        })
    }

    /// `n` equispaced points on the unit interval (a single point sits at 0).
    pub fn unit_interval(n: usize) -> Result<Self> {
        Self::uniform(&[(0.0, 1.0)], &[n])
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn axes(&self) -> Option<&[Vec<f64>]> {
        self.axes.as_deref()
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index,
                size: self.len(),
            })
        }
    }
}
