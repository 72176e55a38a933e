//! Sparse coefficient vectors.
//!
//! Indices are 0-based internally. Anything that crosses an I/O boundary
//! (CSV, config, display) is shifted to 1-based with [`SparseVector::support_one_based`]
//! or the `Display` impl.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{invalid, Result};

/// A vector in `R^n` that stores only its nonzero coordinates.
///
/// The stored key set is exactly the support `NZ(w)`: writing a zero removes
/// the entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    entries: BTreeMap<usize, f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// Unit coordinate vector `e^index`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        let mut v = Self::zeros(dim);
        v.set(index, 1.0)?;
        Ok(v)
    }

    /// Builds a vector from `(index, value)` pairs. Zero values are skipped;
    /// repeated indices keep the last value.
    pub fn from_pairs<I>(dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut v = Self::zeros(dim);
        for (i, x) in pairs {
            v.set(i, x)?;
        }
        Ok(v)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, &x)| (i, x))
            .collect();
        Self {
            dim: values.len(),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `|NZ(w)|`.
    pub fn sparsity(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries.get(&index).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, index: usize) -> bool {
        self.entries.contains_key(&index)
    }

    /// Sets coordinate `index`; a zero value removes it from the support.
    pub fn set(&mut self, index: usize, value: f64) -> Result<()> {
        if index >= self.dim {
            return invalid(format!("index {} out of range 0..{}", index, self.dim));
        }
        if !value.is_finite() {
            return invalid(format!("non-finite coefficient {value} at index {index}"));
        }
        if value == 0.0 {
            self.entries.remove(&index);
        } else {
            self.entries.insert(index, value);
        }
        Ok(())
    }

    /// Iterates over `(index, value)` in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&i, &x)| (i, x))
    }

    /// Support indices in increasing order (0-based).
    pub fn support(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }

    pub fn support_one_based(&self) -> Vec<usize> {
        self.entries.keys().map(|i| i + 1).collect()
    }

    pub fn scaled(&self, gamma: f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(&i, &x)| (i, gamma * x))
            .filter(|(_, x)| *x != 0.0)
            .collect();
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// `self + scale * other`, dropping coordinates that cancel to exactly zero.
    pub fn add_scaled(&self, scale: f64, other: &SparseVector) -> Result<Self> {
        crate::error::check_dim(self.dim, other.dim)?;
        let mut out = self.clone();
        for (i, x) in other.iter() {
            let v = out.get(i) + scale * x;
            out.set(i, v)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SparseVector) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    /// Plain Euclidean `sum_i w_i^2` (not the distribution norm).
    pub fn euclidean_norm_sq(&self) -> f64 {
        self.entries.values().map(|x| x * x).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `w . x` for a dense point `x`.
    pub fn dot_dense(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|(&i, &w)| w * x[i]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, x) in self.iter() {
            out[i] = x;
        }
        out
    }
}

impl fmt::Display for SparseVector {
    /// `{1:0.5, 7:-1.25}` with 1-based indices.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, (i, x)) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", i + 1, x)?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_writes_remove_support() {
        let mut v = SparseVector::from_pairs(5, [(0, 1.0), (3, -2.0)]).unwrap();
        assert_eq!(v.support(), vec![0, 3]);
        v.set(3, 0.0).unwrap();
        assert_eq!(v.support(), vec![0]);
        assert_eq!(v.get(3), 0.0);
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let mut v = SparseVector::zeros(3);
        assert!(v.set(3, 1.0).is_err());
        assert!(v.set(0, f64::NAN).is_err());
    }

    #[test]
    fn cancellation_drops_entries() {
        let a = SparseVector::from_pairs(4, [(1, 2.0), (2, 1.0)]).unwrap();
        let b = SparseVector::from_pairs(4, [(1, 2.0)]).unwrap();
        let d = a.sub(&b).unwrap();
        assert_eq!(d.support(), vec![2]);
        assert!(a.scaled(0.0).is_zero());
    }

    #[test]
    fn display_is_one_based() {
        let v = SparseVector::from_pairs(4, [(0, 0.5), (3, -1.0)]).unwrap();
        assert_eq!(v.to_string(), "{1:0.5, 4:-1}");
        assert_eq!(v.support_one_based(), vec![1, 4]);
    }
}
