use approx::assert_relative_eq;
use evolvolin_core::distributions::{make_smooth, BaseSpec};
use evolvolin_core::framework::{bn_eligible, opt_eligible};
use evolvolin_core::model::{best_projection, expected_loss, lemma1_check};
use evolvolin_core::oracles::omp_reference;
use evolvolin_core::{CovarianceModel, SparseVector};
use proptest::prelude::*;

/// A random `Delta`-smooth covariance with a low-rank base.
fn smooth_cov() -> impl Strategy<Value = (CovarianceModel, f64)> {
    (
        2usize..10,
        1usize..4,
        0.2f64..1.0,
        0.0f64..1.0,
        any::<u64>(),
    )
        .prop_map(|(n, rank, delta, frac, seed)| {
            let base_var = frac * (1.0 - delta * delta);
            let base = BaseSpec::low_rank(n, rank, base_var, seed).unwrap();
            let h = make_smooth(base, delta, n).unwrap();
            (h.covariance().clone(), delta)
        })
}

fn vector(n: usize) -> impl Strategy<Value = SparseVector> {
    prop::collection::vec(prop_oneof![Just(0.0), -3.0f64..3.0], n)
        .prop_map(|v| SparseVector::from_dense(&v))
}

fn cov_and_vectors() -> impl Strategy<Value = (CovarianceModel, f64, SparseVector, SparseVector)> {
    smooth_cov().prop_flat_map(|(cov, delta)| {
        let n = cov.dim();
        (Just(cov), Just(delta), vector(n), vector(n))
    })
}

proptest! {
    #[test]
    fn inner_product_is_symmetric((cov, _, v, w) in cov_and_vectors()) {
        let a = cov.inner(&v, &w).unwrap();
        let b = cov.inner(&w, &v).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn cauchy_schwarz((cov, _, v, w) in cov_and_vectors()) {
        let ip = cov.inner(&v, &w).unwrap();
        let bound = (cov.norm_sq(&v).unwrap() * cov.norm_sq(&w).unwrap()).sqrt();
        prop_assert!(ip.abs() <= bound * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn projection_splits_loss((cov, _, f, w) in cov_and_vectors()) {
        let support = w.support();
        let proj = best_projection(&f, &support, &cov, None).unwrap();
        let total = expected_loss(&f, &w, &cov).unwrap();
        let inner = expected_loss(&proj.projection, &w, &cov).unwrap();
        assert_relative_eq!(total, proj.residual_norm_sq + inner, epsilon = 1e-9, max_relative = 1e-9);
    }

    #[test]
    fn coordinate_bounds_hold((cov, delta, w, _) in cov_and_vectors()) {
        let rep = lemma1_check(&w, &cov, delta).unwrap();
        prop_assert!(rep.max_bound_holds && rep.min_bound_holds);
    }

    #[test]
    fn selection_is_permutation_invariant(
        origin in 0.0f64..2.0,
        losses in prop::collection::vec(0.0f64..2.0, 1..30),
        t in 1e-4f64..0.5,
        shift in 0usize..30,
    ) {
        let n = losses.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let permuted: Vec<f64> = perm.iter().map(|&i| losses[i]).collect();
        for rule in [bn_eligible, opt_eligible] {
            let (set, event) = rule(origin, &losses, t);
            let (pset, pevent) = rule(origin, &permuted, t);
            prop_assert_eq!(event, pevent);
            let mut mapped: Vec<usize> = pset.iter().map(|&j| perm[j]).collect();
            mapped.sort_unstable();
            prop_assert_eq!(mapped, set);
        }
    }

    #[test]
    fn omp_ignores_scale((cov, _, f, _) in cov_and_vectors(), c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]) {
        let k = f.sparsity().max(1);
        let a = omp_reference(&f, &cov, k).unwrap();
        let b = omp_reference(&f.scaled(c), &cov, k).unwrap();
        prop_assert_eq!(a.order, b.order);
    }
}
