//! Exact second-moment matrices and the inner product they induce.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, invalid, Error, Result};
use crate::vector::SparseVector;

/// Subsets whose principal submatrix is worse conditioned than this are
/// rejected by [`CovarianceModel::solve_principal`].
pub const CONDITION_LIMIT: f64 = 1e12;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(DMatrix<f64>),
    /// Independent coordinates. Kept separate so that very wide models
    /// (thousands of coordinates) stay cheap.
    Diagonal(Vec<f64>),
}

/// `sigma[i][j] = E[x_i x_j]` for the input distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    storage: Storage,
}

impl CovarianceModel {
    /// Validates symmetry, positive semidefiniteness and `diag <= 1`.
    pub fn dense(sigma: DMatrix<f64>) -> Result<Self> {
        let n = sigma.nrows();
        if sigma.ncols() != n {
            return invalid(format!(
                "covariance must be square, got {}x{}",
                n,
                sigma.ncols()
            ));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (sigma[(i, j)], sigma[(j, i)]);
                if (a - b).abs() > SYMMETRY_TOL * (1.0 + a.abs().max(b.abs())) {
                    return invalid(format!(
                        "covariance not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
        check_diagonal(sigma.diagonal().iter().copied())?;
        let shifted = &sigma + DMatrix::identity(n, n) * PSD_TOL;
        if Cholesky::new(shifted).is_none() {
            return invalid("covariance is not positive semidefinite");
        }
        Ok(Self {
            storage: Storage::Dense(sigma),
        })
    }

    pub fn diagonal(variances: Vec<f64>) -> Result<Self> {
        if variances.iter().any(|&v| v < 0.0) {
            return invalid("negative variance on the diagonal");
        }
        check_diagonal(variances.iter().copied())?;
        Ok(Self {
            storage: Storage::Diagonal(variances),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            storage: Storage::Diagonal(vec![1.0; n]),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Diagonal(d) => d.len(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.storage, Storage::Diagonal(_))
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m[(i, j)],
            Storage::Diagonal(d) => {
                if i == j {
                    d[i]
                } else {
                    0.0
                }
            }
        }
    }

    /// `E[x_i^2] = ||e^i||^2`.
    pub fn variance(&self, i: usize) -> f64 {
        self.entry(i, i)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
        }
    }

    /// Largest `|corr(x_i, x_j)|` over `i != j`.
    pub fn coherence(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(_) => 0.0,
            Storage::Dense(m) => {
                let n = m.nrows();
                let mut best: f64 = 0.0;
                for i in 0..n {
                    for j in 0..i {
                        let denom = (m[(i, i)] * m[(j, j)]).sqrt();
                        if denom > 0.0 {
                            best = best.max((m[(i, j)] / denom).abs());
                        }
                    }
                }
                best
            }
        }
    }

    /// `<v, w> = v^T Sigma w`.
    ///
    /// Each `(i, j)` term is evaluated as `Sigma_ij * (v_i w_j + w_i v_j) / 2`
    /// over the sorted union of supports, so swapping the arguments yields the
    /// bitwise-identical result.
    pub fn inner(&self, v: &SparseVector, w: &SparseVector) -> Result<f64> {
        check_dim(self.dim(), v.dim())?;
        check_dim(self.dim(), w.dim())?;
        if v.is_zero() || w.is_zero() {
            return Ok(0.0);
        }
        let mut union: Vec<(usize, f64, f64)> = Vec::with_capacity(v.sparsity() + w.sparsity());
        {
            let mut a = v.iter().peekable();
            let mut b = w.iter().peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (Some((i, x)), Some((j, y))) => {
                        if i == j {
                            union.push((i, x, y));
                            a.next();
                            b.next();
                        } else if i < j {
                            union.push((i, x, 0.0));
                            a.next();
                        } else {
                            union.push((j, 0.0, y));
                            b.next();
                        }
                    }
                    (Some((i, x)), None) => {
                        union.push((i, x, 0.0));
                        a.next();
                    }
                    (None, Some((j, y))) => {
                        union.push((j, 0.0, y));
                        b.next();
                    }
                    (None, None) => break,
                }
            }
        }
        let mut total = 0.0;
        match &self.storage {
            Storage::Diagonal(d) => {
                for &(i, x, y) in &union {
                    total += d[i] * (x * y);
                }
            }
            Storage::Dense(m) => {
                for &(i, vi, wi) in &union {
                    for &(j, vj, wj) in &union {
                        let s = m[(i, j)];
                        if s != 0.0 {
                            total += s * (0.5 * (vi * wj + wi * vj));
                        }
                    }
                }
            }
        }
        Ok(total)
    }

    /// `<w, w>`.
    pub fn norm_sq(&self, w: &SparseVector) -> Result<f64> {
        self.inner(w, w)
    }

    /// `<e^i, w> = (Sigma w)_i`.
    pub fn basis_inner(&self, i: usize, w: &SparseVector) -> Result<f64> {
        check_dim(self.dim(), w.dim())?;
        if i >= self.dim() {
            return invalid(format!("index {} out of range", i));
        }
        Ok(match &self.storage {
            Storage::Diagonal(d) => d[i] * w.get(i),
            Storage::Dense(m) => w.iter().map(|(j, x)| m[(i, j)] * x).sum(),
        })
    }

    /// Dense `Sigma w`.
    pub fn apply(&self, w: &SparseVector) -> Result<Vec<f64>> {
        check_dim(self.dim(), w.dim())?;
        let n = self.dim();
        let mut out = vec![0.0; n];
        match &self.storage {
            Storage::Diagonal(d) => {
                for (i, x) in w.iter() {
                    out[i] = d[i] * x;
                }
            }
            Storage::Dense(m) => {
                for (j, x) in w.iter() {
                    let col = m.column(j);
                    for (o, s) in out.iter_mut().zip(col.iter()) {
                        *o += s * x;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Solves `Sigma_SS v = rhs` for the principal submatrix on `subset`.
    ///
    /// Fails with [`Error::DegenerateSubset`] when the submatrix condition
    /// number exceeds [`CONDITION_LIMIT`].
    pub fn solve_principal(&self, subset: &[usize], rhs: &[f64]) -> Result<Vec<f64>> {
        check_dim(subset.len(), rhs.len())?;
        if subset.is_empty() {
            return Ok(Vec::new());
        }
        match &self.storage {
            Storage::Diagonal(d) => {
                let vals: Vec<f64> = subset.iter().map(|&i| d[i]).collect();
                let max = vals.iter().cloned().fold(0.0, f64::max);
                let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let condition = if min > 0.0 { max / min } else { f64::INFINITY };
                if condition > CONDITION_LIMIT {
                    return Err(Error::DegenerateSubset {
                        condition,
                        limit: CONDITION_LIMIT,
                    });
                }
                Ok(rhs.iter().zip(&vals).map(|(b, s)| b / s).collect())
            }
            Storage::Dense(m) => {
                let k = subset.len();
                let sub = DMatrix::from_fn(k, k, |a, b| m[(subset[a], subset[b])]);
                let eig = SymmetricEigen::new(sub.clone());
                let max = eig
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max);
                let min = eig
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                let condition = if min > 0.0 { max / min } else { f64::INFINITY };
                if condition > CONDITION_LIMIT {
                    return Err(Error::DegenerateSubset {
                        condition,
                        limit: CONDITION_LIMIT,
                    });
                }
                let chol = Cholesky::new(sub).ok_or(Error::DegenerateSubset {
                    condition,
                    limit: CONDITION_LIMIT,
                })?;
                let x = chol.solve(&DVector::from_column_slice(rhs));
                Ok(x.iter().copied().collect())
            }
        }
    }
}

fn check_diagonal(diag: impl Iterator<Item = f64>) -> Result<()> {
    for (i, v) in diag.enumerate() {
        if !v.is_finite() || v > 1.0 + SYMMETRY_TOL {
            return invalid(format!(
                "second moment E[x_{}^2] = {} must lie in [0, 1]",
                i + 1,
                v
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(dim: usize, pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector::from_pairs(dim, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn unit_and_orthogonal_basis() {
        let id = CovarianceModel::identity(4);
        let e1 = SparseVector::basis(4, 0).unwrap();
        let e2 = SparseVector::basis(4, 1).unwrap();
        assert_eq!(id.inner(&e1, &e1).unwrap(), 1.0);
        assert_eq!(id.inner(&e1, &e2).unwrap(), 0.0);
        let diag = CovarianceModel::diagonal(vec![0.3, 0.7, 1.0, 0.2]).unwrap();
        assert_eq!(diag.inner(&e1, &e2).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let id = CovarianceModel::identity(3);
        let v = SparseVector::zeros(4);
        let w = SparseVector::zeros(3);
        assert!(matches!(
            id.inner(&v, &w),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_invalid_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 1.0]);
        assert!(CovarianceModel::dense(asym).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 1.5, 1.5, 1.0]);
        assert!(CovarianceModel::dense(indefinite).is_err());
        let big = DMatrix::from_row_slice(1, 1, &[1.5]);
        assert!(CovarianceModel::dense(big).is_err());
    }

    #[test]
    fn dense_matches_hand_value() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let cov = CovarianceModel::dense(m).unwrap();
        let v = sv(2, &[(0, 1.0), (1, 1.0)]);
        let w = sv(2, &[(0, 1.0), (1, -1.0)]);
        // (1,1) S (1,-1)^T = 1 - 0.3 + 0.3 - 1 = 0
        assert!(cov.inner(&v, &w).unwrap().abs() < 1e-15);
        // (1,1) S (1,1)^T = 2.6
        assert!((cov.norm_sq(&v).unwrap() - 2.6).abs() < 1e-15);
        assert!((cov.basis_inner(1, &v).unwrap() - 1.3).abs() < 1e-15);
    }

    #[test]
    fn singular_subset_is_degenerate() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let cov = CovarianceModel::dense(m).unwrap();
        assert!(matches!(
            cov.solve_principal(&[0, 1], &[1.0, 1.0]),
            Err(Error::DegenerateSubset { .. })
        ));
        assert!(cov.solve_principal(&[0], &[1.0]).is_ok());
    }
}
