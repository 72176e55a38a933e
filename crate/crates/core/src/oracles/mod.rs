//! Independent checkers: a Monte Carlo loss estimate, a population OMP
//! reference, and exact verifiers for the coordinate bound lemma and the five
//! loss-decrease claims behind both convergence proofs.

mod claims;
mod suites;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covariance::CovarianceModel;
use crate::distributions::{sample, DistributionHandle};
use crate::error::{check_dim, invalid, Result};
use crate::model::best_projection;
use crate::vector::SparseVector;

pub use claims::{
    verify_claim_apple, verify_claim_banana, verify_claim_cantaloupe, verify_claim_date,
    verify_claim_elderberry, ClaimId, ClaimReport, Verdict, Witness, DECREASE_TOL, GRID_POINTS,
};
pub use suites::{
    claim_instance, lemma1_instance, run_claim_suite, run_lemma1_suite, InstanceOutcome,
    SuiteResult, MAX_ATTEMPTS,
};

const MC_CHUNK: usize = 10_000;

/// Sample mean of `(f.x - w.x)^2` over `s` fresh points, with its standard error.
pub fn monte_carlo_loss(
    f: &SparseVector,
    w: &SparseVector,
    handle: &DistributionHandle,
    s: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if s < 100 {
        return invalid("Monte Carlo loss needs at least 100 samples");
    }
    check_dim(handle.dim(), f.dim())?;
    let diff = f.sub(w)?;
    if diff.is_zero() {
        return Ok((0.0, 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2, mut count) = (0.0, 0.0, 0usize);
    let mut left = s;
    while left > 0 {
        let chunk = left.min(MC_CHUNK);
        let batch = sample(handle, chunk, rng.random())?;
        let mut pred = vec![0.0; chunk];
        for (j, c) in diff.iter() {
            for (p, x) in pred.iter_mut().zip(batch.column(j)) {
                *p += c * x;
            }
        }
        for p in pred {
            let v = p * p;
            count += 1;
            let d = v - mean;
            mean += d / count as f64;
            m2 += d * (v - mean);
        }
        left -= chunk;
    }
    let var = m2 / (count - 1) as f64;
    Ok((mean, (var / count as f64).sqrt()))
}

/// Greedy pick order and final projection of [`omp_reference`].
#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    /// Selected indices in pick order (0-based).
    pub order: Vec<usize>,
    pub coefficients: SparseVector,
    pub residual_norm_sq: f64,
}

impl OmpResult {
    pub fn support(&self) -> Vec<usize> {
        let mut s = self.order.clone();
        s.sort_unstable();
        s
    }
}

/// Population orthogonal matching pursuit: repeatedly add the index maximizing
/// `|<e^i, r>| / ||e^i||` for the current residual `r = f - f^S`, then re-project.
/// Stops after `k` picks or once `||r|| < 1e-12`. Ties go to the lower index.
pub fn omp_reference(f: &SparseVector, cov: &CovarianceModel, k: usize) -> Result<OmpResult> {
    check_dim(cov.dim(), f.dim())?;
    let n = f.dim();
    let mut order: Vec<usize> = Vec::new();
    let mut coefficients = SparseVector::zeros(n);
    let mut residual_norm_sq = cov.norm_sq(f)?.max(0.0);
    while order.len() < k && residual_norm_sq.sqrt() >= 1e-12 {
        let r = f.sub(&coefficients)?;
        let sr = cov.apply(&r)?;
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in sr.iter().enumerate() {
            if order.contains(&i) {
                continue;
            }
            let v = cov.variance(i);
            if v <= 0.0 {
                continue;
            }
            let score = c.abs() / v.sqrt();
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((i, score));
            }
        }
        let Some((i, _)) = best else { break };
        order.push(i);
        let proj = best_projection(f, &order, cov, None)?;
        coefficients = proj.projection;
        residual_norm_sq = proj.residual_norm_sq;
    }
    Ok(OmpResult {
        order,
        coefficients,
        residual_norm_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_smooth, BaseSpec};

    #[test]
    fn monte_carlo_trivial_cases() {
        let h = make_smooth(BaseSpec::PointMass, 1.0, 3).unwrap();
        let f = SparseVector::basis(3, 0).unwrap();
        assert_eq!(monte_carlo_loss(&f, &f, &h, 100, 0).unwrap(), (0.0, 0.0));
        assert!(monte_carlo_loss(&f, &f, &h, 99, 0).is_err());
    }

    #[test]
    fn omp_orders_by_weighted_coefficient() {
        let cov = CovarianceModel::diagonal(vec![1.0, 1.0, 0.5, 0.5]).unwrap();
        let f = SparseVector::from_pairs(4, [(0, 3.0), (1, 1.0)]).unwrap();
        let res = omp_reference(&f, &cov, 2).unwrap();
        assert_eq!(res.order, vec![0, 1]);
        assert!(res.residual_norm_sq < 1e-20);
        assert_eq!(res.coefficients, f);
    }

    #[test]
    fn omp_stops_on_zero_residual() {
        let cov = CovarianceModel::identity(5);
        let f = SparseVector::from_pairs(5, [(2, -1.0)]).unwrap();
        let res = omp_reference(&f, &cov, 3).unwrap();
        assert_eq!(res.order, vec![2]);
        let res = omp_reference(&SparseVector::zeros(5), &cov, 3).unwrap();
        assert!(res.order.is_empty());
    }
}
