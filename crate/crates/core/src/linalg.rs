//! Small dense linear-algebra helpers shared by the model and DPP code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::{Error, Result};

/// Relative tolerance (scaled by `trace / N`) below which a negative
/// eigenvalue is a hard PSD violation rather than rounding noise.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Eigenvalues smaller than this fraction of the largest one are dropped
/// from square-root factors.
const RANK_CUTOFF: f64 = 1e-13;

/// Returns `R` (N x r) with `R R^T` equal to the PSD repair of `matrix`.
///
/// Negative eigenvalues above `-PSD_TOLERANCE * trace / N` are clipped to
/// zero; anything more negative is reported as a numerical error.
pub fn psd_sqrt(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::numerical("square-root factor of a non-square matrix"));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let sym = (matrix + matrix.transpose()) * 0.5;
    let scale = (sym.trace() / n as f64).abs();
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.min();
    if min < -PSD_TOLERANCE * scale {
        return Err(Error::numerical(format!(
            "matrix is not positive semidefinite (min eigenvalue {min:e}, tolerance {:e})",
            PSD_TOLERANCE * scale
        )));
    }
    let max = eig.eigenvalues.max().max(0.0);
    let keep: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k] > RANK_CUTOFF * max)
        .collect();
    let mut root = DMatrix::zeros(n, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        root.set_column(col, &(eig.eigenvectors.column(k) * s));
    }
    Ok(root)
}

/// Log-determinant of a small symmetric matrix.
///
/// Tries Cholesky first and falls back to LU with partial pivoting. Returns
/// `f64::NEG_INFINITY` when the determinant is zero or negative (a singular
/// restricted kernel, e.g. duplicated rows of an unregularized L-ensemble).
pub fn logdet_sym(matrix: &DMatrix<f64>) -> f64 {
    if matrix.nrows() == 0 {
        return 0.0;
    }
    if let Some(chol) = matrix.clone().cholesky() {
        let l = chol.l_dirty();
        let mut acc = 0.0;
        for i in 0..matrix.nrows() {
            let d = l[(i, i)];
            if d * d <= 1e-13 * matrix[(i, i)].abs() || !d.is_finite() {
                return f64::NEG_INFINITY;
            }
            acc += d.ln();
        }
        return 2.0 * acc;
    }
    let det = matrix.clone().lu().determinant();
    // Numerically singular matrices come back with a tiny determinant of
    // either sign; treat anything that small as an exact zero.
    let scale: f64 = (0..matrix.nrows()).map(|i| matrix[(i, i)].abs()).product();
    if det <= 1e-13 * scale.max(f64::MIN_POSITIVE) || !det.is_finite() {
        f64::NEG_INFINITY
    } else {
        det.ln()
    }
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest value; exact ties are broken uniformly at random.
pub fn argmax_random_ties<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let mut best = 0;
    let mut ties = 1u32;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
            ties = 1;
        } else if v == values[best] {
            // reservoir sampling over the tied set
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                best = i;
            }
        }
    }
    best
}

/// Gauss-Hermite rule for the standard normal measure (probabilists'
/// weights summing to one), via Golub-Welsch.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one node");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let off = (k as f64).sqrt();
        jacobi[(k - 1, k)] = off;
        jacobi[(k, k - 1)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w / total)).unzip()
}

/// Solves `L x = b` for a lower-triangular `L` stored as packed rows
/// (`rows[i]` holds `L[i, 0..=i]`).
pub(crate) fn forward_solve_packed(rows: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    for i in 0..b.len() {
        let row = &rows[i];
        let mut acc = b[i];
        for k in 0..i {
            acc -= row[k] * x[k];
        }
        x[i] = acc / row[i];
    }
    x
}

/// Draws a vector of `n` independent standard normals.
pub fn standard_normals<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn sqrt_reproduces_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 0.7]);
        let r = psd_sqrt(&m).unwrap();
        assert_relative_eq!(&r * r.transpose(), m, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(psd_sqrt(&m), Err(Error::Numerical { .. })));
    }

    #[test]
    fn sqrt_of_zero_is_empty() {
        let r = psd_sqrt(&DMatrix::zeros(4, 4)).unwrap();
        assert_eq!(r.ncols(), 0);
    }

    #[test]
    fn logdet_matches_closed_form() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_relative_eq!(logdet_sym(&m), 3f64.ln(), epsilon = 1e-14);
        let singular = DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(logdet_sym(&singular), f64::NEG_INFINITY);
        // indefinite but nonsingular: Cholesky fails, LU gives a negative det
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(logdet_sym(&indef), f64::NEG_INFINITY);
    }

    #[test]
    fn hermite_rule_integrates_moments() {
        let (x, w) = gauss_hermite(10);
        let moment = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert_relative_eq!(moment(0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(moment(2), 1.0, epsilon = 1e-10);
        assert_relative_eq!(moment(4), 3.0, epsilon = 1e-10);
        assert_relative_eq!(moment(6), 15.0, epsilon = 1e-9);
    }

    #[test]
    fn ties_resolve_as_documented() {
        let v = [1.0, 3.0, 3.0, 0.0];
        assert_eq!(argmax_lowest(&v), 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut hits = [0usize; 4];
        for _ in 0..4000 {
            hits[argmax_random_ties(&v, &mut rng)] += 1;
        }
        assert_eq!(hits[0] + hits[3], 0);
        assert!(hits[1] > 1800 && hits[2] > 1800, "{hits:?}");
    }
}
