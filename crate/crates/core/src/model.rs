//! The sparse linear function class, exact losses and best-subset projections.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::covariance::CovarianceModel;
use crate::error::{check_dim, invalid, Error, Result};
use crate::vector::SparseVector;

/// Parameters of one problem instance: the target class `Lin^k_{l,u}` over
/// `R^n`, the accuracy goal and the distribution constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    pub n: usize,
    pub k: usize,
    pub l: f64,
    pub u: f64,
    pub epsilon: f64,
    /// Variance floor `Delta`.
    pub delta: f64,
    /// Support radius `G` with `sum_i x_i^2 <= G^2`.
    pub g_bound: f64,
    /// Coherence bound; only needed for optimization-based selection.
    pub mu: Option<f64>,
}

impl ProblemParams {
    pub fn validate(&self) -> Result<()> {
        // l == u is allowed: every nonzero coefficient then has magnitude l.
        if !(self.l >= 0.0 && self.l <= self.u && self.u > 0.0) {
            return invalid(format!(
                "need 0 <= l <= u and u > 0, got l={} u={}",
                self.l, self.u
            ));
        }
        if self.k < 1 || self.k > self.n {
            return invalid(format!("need 1 <= k <= n, got k={} n={}", self.k, self.n));
        }
        if !(self.epsilon > 0.0) {
            return invalid("epsilon must be positive");
        }
        if !(self.delta > 0.0) {
            return invalid("delta must be positive");
        }
        if !(self.g_bound > 0.0) {
            return invalid("g_bound must be positive");
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu < 1.0) {
                return invalid(format!("mu must lie in (0, 1), got {mu}"));
            }
        }
        Ok(())
    }
}

/// The ideal function `f`, a member of `Lin^k_{l,u}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFunction {
    vector: SparseVector,
    params: ProblemParams,
}

impl TargetFunction {
    pub fn new(vector: SparseVector, params: ProblemParams) -> Result<Self> {
        params.validate()?;
        check_dim(params.n, vector.dim())?;
        if vector.sparsity() > params.k {
            return invalid(format!(
                "target has {} nonzeros, class allows {}",
                vector.sparsity(),
                params.k
            ));
        }
        for (i, x) in vector.iter() {
            if x.abs() < params.l || x.abs() > params.u {
                return invalid(format!(
                    "coefficient {} at index {} outside [{}, {}]",
                    x,
                    i + 1,
                    params.l,
                    params.u
                ));
            }
        }
        Ok(Self { vector, params })
    }

    /// Draws exactly `k` distinct coordinates uniformly, each with magnitude
    /// uniform on `[l, u]` and a fair random sign.
    pub fn random<R: Rng + ?Sized>(params: ProblemParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let mut idx = sample_indices(rng, params.n, params.k).into_vec();
        idx.sort_unstable();
        let mut v = SparseVector::zeros(params.n);
        for i in idx {
            let mut mag = if params.u > params.l {
                rng.random_range(params.l..=params.u)
            } else {
                params.l
            };
            if mag == 0.0 {
                mag = params.u;
            }
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            v.set(i, sign * mag)?;
        }
        Self::new(v, params)
    }

    pub fn vector(&self) -> &SparseVector {
        &self.vector
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }
}

/// `E_x[(v.x)(w.x)]`.
pub fn inner_product(v: &SparseVector, w: &SparseVector, cov: &CovarianceModel) -> Result<f64> {
    cov.inner(v, w)
}

/// Squared loss `L_{f,D}(w) = ||f - w||^2`.
pub fn expected_loss(f: &SparseVector, w: &SparseVector, cov: &CovarianceModel) -> Result<f64> {
    check_dim(f.dim(), w.dim())?;
    let diff = f.sub(w)?;
    Ok(cov.norm_sq(&diff)?.max(0.0))
}

/// `f^S` together with its residual and, optionally, `r^S = f^S - w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub projection: SparseVector,
    /// `||f - f^S||^2`.
    pub residual_norm_sq: f64,
    pub inner_residual: Option<SparseVector>,
}

/// Best approximation of `f` among vectors supported on `subset`, from the
/// normal equations `Sigma_SS v_S = (Sigma f)_S`.
pub fn best_projection(
    f: &SparseVector,
    subset: &[usize],
    cov: &CovarianceModel,
    reference: Option<&SparseVector>,
) -> Result<ProjectionResult> {
    check_dim(cov.dim(), f.dim())?;
    let mut s: Vec<usize> = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(&last) = s.last() {
        if last >= f.dim() {
            return invalid(format!("subset index {} out of range", last + 1));
        }
    }
    let rhs: Vec<f64> = s
        .iter()
        .map(|&i| cov.basis_inner(i, f))
        .collect::<Result<_>>()?;
    let coef = cov.solve_principal(&s, &rhs)?;
    let projection = SparseVector::from_pairs(f.dim(), s.iter().copied().zip(coef))?;
    let residual_norm_sq = expected_loss(f, &projection, cov)?;
    let inner_residual = match reference {
        Some(w) => {
            check_dim(f.dim(), w.dim())?;
            Some(projection.sub(w)?)
        }
        None => None,
    };
    Ok(ProjectionResult {
        projection,
        residual_norm_sq,
        inner_residual,
    })
}

/// Outcome of checking the two coordinate bounds implied by a variance floor.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    pub empty_support: bool,
    /// `<w,w>/Delta^2 - max_i w_i^2`.
    pub max_slack: f64,
    /// `<w,w>/(|NZ(w)| Delta^2) - min_{i in NZ(w)} w_i^2`.
    pub min_slack: f64,
    pub max_bound_holds: bool,
    pub min_bound_holds: bool,
}

/// Slack tolerance for [`lemma1_check`].
pub const LEMMA1_TOL: f64 = 1e-9;

/// Checks `max_i w_i^2 <= <w,w>/Delta^2` and
/// `min_{i in NZ(w)} w_i^2 <= <w,w>/(|NZ(w)| Delta^2)`.
pub fn lemma1_check(w: &SparseVector, cov: &CovarianceModel, delta: f64) -> Result<Lemma1Report> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    if w.is_zero() {
        return Ok(Lemma1Report {
            empty_support: true,
            max_slack: 0.0,
            min_slack: 0.0,
            max_bound_holds: true,
            min_bound_holds: true,
        });
    }
    let norm = cov.norm_sq(w)?;
    let d2 = delta * delta;
    let sq: Vec<f64> = w.iter().map(|(_, x)| x * x).collect();
    let max = sq.iter().cloned().fold(0.0, f64::max);
    let min = sq.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_slack = norm / d2 - max;
    let min_slack = norm / (sq.len() as f64 * d2) - min;
    Ok(Lemma1Report {
        empty_support: false,
        max_slack,
        min_slack,
        max_bound_holds: max_slack >= -LEMMA1_TOL,
        min_bound_holds: min_slack >= -LEMMA1_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, k: usize) -> ProblemParams {
        ProblemParams {
            n,
            k,
            l: 0.5,
            u: 1.0,
            epsilon: 0.05,
            delta: 0.5,
            g_bound: 10.0,
            mu: None,
        }
    }

    #[test]
    fn params_validation() {
        assert!(params(10, 3).validate().is_ok());
        let mut p = params(10, 3);
        p.k = 0;
        assert!(p.validate().is_err());
        let mut p = params(10, 3);
        p.l = 2.0;
        assert!(p.validate().is_err());
        let mut p = params(10, 3);
        p.mu = Some(1.0);
        assert!(p.validate().is_err());
        let mut p = params(10, 3);
        p.l = 1.0;
        p.u = 1.0;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn random_target_is_in_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let f = TargetFunction::random(params(20, 4), &mut rng).unwrap();
            assert_eq!(f.vector().sparsity(), 4);
            assert!(f
                .vector()
                .iter()
                .all(|(_, x)| (0.5..=1.0).contains(&x.abs())));
        }
        let bad = SparseVector::from_pairs(20, [(0, 2.0)]).unwrap();
        assert!(TargetFunction::new(bad, params(20, 4)).is_err());
    }

    #[test]
    fn loss_of_identical_and_unit() {
        let cov = CovarianceModel::identity(3);
        let f = SparseVector::from_pairs(3, [(0, 1.0)]).unwrap();
        assert_eq!(expected_loss(&f, &f, &cov).unwrap(), 0.0);
        assert_eq!(
            expected_loss(&f, &SparseVector::zeros(3), &cov).unwrap(),
            1.0
        );
    }

    #[test]
    fn projection_cases() {
        let cov = CovarianceModel::identity(4);
        let f = SparseVector::from_pairs(4, [(0, 1.0), (2, -0.5)]).unwrap();
        let p = best_projection(&f, &[0, 1, 2], &cov, None).unwrap();
        assert_eq!(p.projection, f);
        assert_eq!(p.residual_norm_sq, 0.0);
        let p = best_projection(&f, &[1, 3], &cov, None).unwrap();
        assert!(p.projection.is_zero());
        assert!((p.residual_norm_sq - 1.25).abs() < 1e-15);
    }

    #[test]
    fn projection_on_correlated_pair_matches_grid_search() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let cov = CovarianceModel::dense(m).unwrap();
        let f = SparseVector::from_pairs(2, [(0, 1.0)]).unwrap();
        let p = best_projection(&f, &[1], &cov, None).unwrap();
        // Grid oracle over beta in [-2, 2] step 1e-4.
        let mut best = (f64::INFINITY, 0.0);
        for step in 0..=40_000 {
            let beta = -2.0 + step as f64 * 1e-4;
            let w = SparseVector::from_pairs(2, [(1, beta)]).unwrap();
            let l = expected_loss(&f, &w, &cov).unwrap();
            if l < best.0 {
                best = (l, beta);
            }
        }
        assert!((p.projection.get(1) - best.1).abs() <= 1e-4);
        assert!((p.projection.get(1) - 0.5).abs() < 1e-14);
        assert!((p.residual_norm_sq - best.0).abs() < 1e-8);
    }

    #[test]
    fn degenerate_subset_is_reported() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let cov = CovarianceModel::dense(m).unwrap();
        let f = SparseVector::from_pairs(2, [(0, 1.0)]).unwrap();
        assert!(matches!(
            best_projection(&f, &[0, 1], &cov, None),
            Err(Error::DegenerateSubset { .. })
        ));
    }

    #[test]
    fn lemma1_trivial_cases() {
        let cov = CovarianceModel::identity(3);
        let r = lemma1_check(&SparseVector::zeros(3), &cov, 1.0).unwrap();
        assert!(r.empty_support && r.max_bound_holds && r.min_bound_holds);
        let e1 = SparseVector::basis(3, 0).unwrap();
        let r = lemma1_check(&e1, &cov, 1.0).unwrap();
        assert_eq!(r.max_slack, 0.0);
        assert!(r.max_bound_holds && r.min_bound_holds);
    }
}
