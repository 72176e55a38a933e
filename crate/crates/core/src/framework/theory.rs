//! Constants from the convergence proofs of the two mechanisms.
//!
//! The generation, neighborhood and sample-size bounds come out astronomically
//! large even for tiny problems, so counts are kept as `f64`.

use crate::error::{Error, Result};
use crate::model::ProblemParams;

/// Above this many sample evaluations (`g * s`) a theory-mode run is not
/// attempted.
pub const FEASIBLE_SAMPLE_EVALUATIONS: f64 = 1e9;

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    /// Sparsity bound `K` of the representation class.
    pub cap_k: f64,
    /// Coefficient box `B`.
    pub cap_b: f64,
    /// Norm bound `W`, `W^2 = K B^2`.
    pub cap_w: f64,
    /// Per-generation probability floor of a useful mutation.
    pub p: f64,
    /// Guaranteed per-step loss decrease.
    pub alpha: f64,
    /// Generation bound.
    pub g: f64,
    /// Neighborhood size.
    pub m: f64,
    /// Sample size per generation.
    pub s: f64,
    /// Selection tolerance, `3 alpha / 5`.
    pub t: f64,
    /// Allowed empirical-loss deviation, `alpha / 5`.
    pub tau: f64,
    /// Probability of an adding neighborhood (optimization-based selection only).
    pub lambda: Option<f64>,
}

impl TheoryParams {
    /// Largest integer sparsity admitted by `K`.
    pub fn sparsity_cap(&self) -> usize {
        self.cap_k.floor() as usize
    }

    pub fn w_sq(&self) -> f64 {
        self.cap_k * self.cap_b * self.cap_b
    }

    pub fn sample_evaluations(&self) -> f64 {
        self.g * self.s
    }

    pub fn is_feasible(&self) -> bool {
        self.sample_evaluations() <= FEASIBLE_SAMPLE_EVALUATIONS
    }
}

/// Constants for beneficial/neutral selection on a `Delta`-smooth distribution.
pub fn theory_params_bn(pp: &ProblemParams) -> Result<TheoryParams> {
    pp.validate()?;
    if pp.l == 0.0 {
        return Err(Error::Unsupported(
            "theory constants need l > 0; the l = 0 class has no explicit sparsity bound".into(),
        ));
    }
    let k = pp.k as f64;
    let (l, u, delta, eps, n, g2) = (
        pp.l,
        pp.u,
        pp.delta,
        pp.epsilon,
        pp.n as f64,
        pp.g_bound * pp.g_bound,
    );
    let cap_k = 5184.0 * (k / delta).powi(4) * (u / l).powi(2);
    let cap_b = 10.0 * u * k / delta;
    let b2 = cap_b * cap_b;
    let p = (1.0_f64 / 12.0)
        .min(l * l * delta.powi(3) / (24.0 * cap_k.powi(3) * b2))
        .min(delta * eps.sqrt() / (6.0 * cap_k * cap_b * n * k));
    let alpha = (l.powi(4) * delta.powi(4) / (192.0 * cap_k * cap_k * b2))
        .min(3.0 * l.powi(4) * delta.powi(6) / (64.0 * cap_k.powi(4) * b2))
        .min(eps * delta * delta / (16.0 * k * k));
    let g = (20.0 * cap_k * g2 * b2 / alpha).ceil();
    let m = ((2.0 * g / eps).ln() / p).ceil();
    let t = 3.0 * alpha / 5.0;
    let tau = alpha / 5.0;
    let s = ((200.0 * g * cap_k * g2 * b2 / (alpha * alpha)) * (4.0 * m / eps).ln()).ceil();
    Ok(TheoryParams {
        cap_k,
        cap_b,
        cap_w: (cap_k * b2).sqrt(),
        p,
        alpha,
        g,
        m,
        s,
        t,
        tau,
        lambda: None,
    })
}

/// Constants for optimization-based selection on a `1/(2k)`-incoherent distribution.
pub fn theory_params_opt(pp: &ProblemParams) -> Result<TheoryParams> {
    pp.validate()?;
    let k = pp.k as f64;
    match pp.mu {
        Some(mu) if mu <= 1.0 / (2.0 * k) => {}
        Some(mu) => {
            return Err(Error::Precondition(format!(
                "coherence {mu} exceeds 1/(2k) = {}",
                1.0 / (2.0 * k)
            )))
        }
        None => {
            return Err(Error::Precondition(
                "optimization-based selection needs a coherence bound mu".into(),
            ))
        }
    }
    let (u, delta, eps, g2) = (pp.u, pp.delta, pp.epsilon, pp.g_bound * pp.g_bound);
    let cap_b = 10.0 * u * k / delta;
    let b2 = cap_b * cap_b;
    let p = (1.0_f64 / 16.0)
        .min(eps.sqrt() / (64.0 * k.powi(3) * cap_b))
        .min(((k + 1.0) * eps).sqrt() / (k * k));
    let alpha = eps / (192.0 * k.powi(4));
    let t = 3.0 * alpha / 5.0;
    let tau = alpha / 5.0;
    let lambda = eps * alpha / (80.0 * k * (k + 1.0) * b2 * g2);
    let g = (4.0 * (k + 1.0).powi(2) / (eps * lambda)).ceil() + (k + 1.0);
    let m = ((4.0 * g / eps).ln() / p).ceil();
    let s = ((200.0 * g * k * g2 * b2 / (alpha * alpha)) * (4.0 * m / eps).ln()).ceil();
    Ok(TheoryParams {
        cap_k: k,
        cap_b,
        cap_w: (k * b2).sqrt(),
        p,
        alpha,
        g,
        m,
        s,
        t,
        tau,
        lambda: Some(lambda),
    })
}
