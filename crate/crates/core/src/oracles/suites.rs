//! Seeded random instance generators and suites for the claim verifiers.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::claims::{apple, banana, cantaloupe, date, elderberry, ClaimId, ClaimReport, Verdict};
use crate::covariance::CovarianceModel;
use crate::distributions::{make_incoherent, make_smooth, BaseSpec, Structure};
use crate::error::Result;
use crate::framework::theory_params_bn;
use crate::model::{best_projection, lemma1_check, Lemma1Report, ProblemParams};
use crate::rng::{stream, Purpose, StreamRng};
use crate::vector::SparseVector;

/// Rejection-sampling budget per instance.
pub const MAX_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceOutcome {
    Report(Box<ClaimReport>),
    /// No precondition-satisfying instance within [`MAX_ATTEMPTS`].
    Starved {
        attempts: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub claim: ClaimId,
    pub master_seed: u64,
    /// `(instance index, outcome)` in index order.
    pub outcomes: Vec<(u64, InstanceOutcome)>,
}

impl SuiteResult {
    fn count(&self, verdict: Verdict) -> usize {
        self.reports().filter(|r| r.verdict() == verdict).count()
    }

    pub fn reports(&self) -> impl Iterator<Item = &ClaimReport> {
        self.outcomes.iter().filter_map(|(_, o)| match o {
            InstanceOutcome::Report(r) => Some(r.as_ref()),
            InstanceOutcome::Starved { .. } => None,
        })
    }

    pub fn passed(&self) -> usize {
        self.count(Verdict::Pass)
    }

    pub fn failed(&self) -> usize {
        self.count(Verdict::Fail)
    }

    pub fn skipped(&self) -> usize {
        self.count(Verdict::Skipped)
    }

    pub fn starved(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|(_, o)| matches!(o, InstanceOutcome::Starved { .. }))
            .count()
    }
}

fn uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn random_subset(rng: &mut StreamRng, pool: &[usize], size: usize) -> Vec<usize> {
    let mut s: Vec<usize> = sample_indices(rng, pool.len(), size)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    s.sort_unstable();
    s
}

/// Random vector on `support` with every coordinate nonzero, rescaled to
/// `||v|| = norm` (or zero when `norm` is zero).
fn random_on(
    rng: &mut StreamRng,
    n: usize,
    support: &[usize],
    norm: f64,
    cov: &CovarianceModel,
) -> Result<SparseVector> {
    let mut v = SparseVector::zeros(n);
    for &i in support {
        let mag = rng.random_range(0.1..1.0);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        v.set(i, sign * mag)?;
    }
    let cur = cov.norm_sq(&v)?.sqrt();
    if cur == 0.0 || norm == 0.0 {
        return Ok(SparseVector::zeros(n));
    }
    Ok(v.scaled(norm / cur))
}

fn random_target(rng: &mut StreamRng, n: usize, k: usize, l: f64, u: f64) -> Result<SparseVector> {
    let idx = random_subset(rng, &(0..n).collect::<Vec<_>>(), k);
    let mut f = SparseVector::zeros(n);
    for i in idx {
        let mag = uniform(rng, l, u);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        f.set(i, sign * mag)?;
    }
    Ok(f)
}

/// A `Delta`-smooth second-moment matrix: a low-rank base plus `Delta^2 I`,
/// or a diagonal with entries in `[Delta^2, 1]`.
fn smooth_covariance(rng: &mut StreamRng, n: usize, delta: f64) -> Result<CovarianceModel> {
    let d2 = delta * delta;
    if d2 >= 1.0 - 1e-12 {
        return Ok(CovarianceModel::identity(n));
    }
    if rng.random_bool(0.25) {
        let vars = (0..n).map(|_| uniform(rng, d2, 1.0)).collect();
        return CovarianceModel::diagonal(vars);
    }
    let rank = rng.random_range(1..=3usize.min(n));
    let variance = uniform(rng, 0.0, 1.0 - d2);
    let base = BaseSpec::low_rank(n, rank, variance, rng.random())?;
    Ok(make_smooth(base, delta, n)?.covariance().clone())
}

struct BnSetting {
    params: ProblemParams,
    cov: CovarianceModel,
    f: SparseVector,
}

fn bn_setting(rng: &mut StreamRng, allow_unit_delta: bool) -> Result<BnSetting> {
    let n = rng.random_range(4..=16usize);
    let k = rng.random_range(1..=3usize);
    let delta = if allow_unit_delta && rng.random_bool(0.15) {
        1.0
    } else {
        uniform(rng, 0.3, 0.95)
    };
    let u = 1.0;
    let l = uniform(rng, 0.2, 1.0);
    let cov = smooth_covariance(rng, n, delta)?;
    let f = random_target(rng, n, k, l, u)?;
    let params = ProblemParams {
        n,
        k,
        l,
        u,
        epsilon: 0.05,
        delta,
        g_bound: 1.0,
        mu: None,
    };
    Ok(BnSetting { params, cov, f })
}

fn describe(n: usize, k: usize, delta: f64, s: usize, cov: &CovarianceModel) -> String {
    format!(
        "n={n} k={k} delta={delta:.4} |S|={s} {}",
        if cov.is_diagonal() {
            "diagonal"
        } else {
            "dense"
        }
    )
}

type Attempt = Option<ClaimReport>;

fn attempt_apple(rng: &mut StreamRng, factor: f64) -> Result<Attempt> {
    let st = bn_setting(rng, false)?;
    let n = st.params.n;
    let size = rng.random_range(1..n);
    let s = random_subset(rng, &(0..n).collect::<Vec<_>>(), size);
    let fs = best_projection(&st.f, &s, &st.cov, None)?.projection;
    let nfs = st.cov.norm_sq(&fs)?.sqrt();
    let norm = if nfs > 0.0 {
        uniform(rng, 2.0, 6.0) * nfs
    } else {
        uniform(rng, 0.1, 2.0)
    };
    let w = random_on(rng, n, &s, norm, &st.cov)?;
    let mut rep = apple(&st.f, &w, &s, &st.cov, factor)?;
    rep.instance = describe(n, st.params.k, st.params.delta, s.len(), &st.cov);
    Ok(rep.precondition_met.then_some(rep))
}

fn attempt_banana(rng: &mut StreamRng, factor: f64) -> Result<Attempt> {
    let st = bn_setting(rng, true)?;
    let n = st.params.n;
    let theory = theory_params_bn(&st.params)?;
    let size = if rng.random_bool(0.2) {
        1
    } else {
        rng.random_range(1..n)
    };
    let s = random_subset(rng, &(0..n).collect::<Vec<_>>(), size);
    let fs = best_projection(&st.f, &s, &st.cov, None)?.projection;
    let nfs = st.cov.norm_sq(&fs)?.sqrt();
    let norm = uniform(rng, 0.0, 2.0) * nfs;
    let w = random_on(rng, n, &s, norm, &st.cov)?;
    let mut rep = banana(
        &st.f,
        &w,
        &s,
        &st.cov,
        theory.cap_k,
        theory.cap_b,
        st.params.delta,
        factor,
    )?;
    rep.instance = describe(n, st.params.k, st.params.delta, s.len(), &st.cov);
    Ok(rep.precondition_met.then_some(rep))
}

/// Either a small dense instance (adding, `|S| < K`) or a diagonal instance at
/// the sparsity cap (swapping, `|S| = K`).
fn attempt_cantaloupe(rng: &mut StreamRng, factor: f64) -> Result<Attempt> {
    let swap = rng.random_bool(0.2);
    let (params, cov, f, s) = if swap {
        let delta = if rng.random_bool(0.5) { 1.0 } else { 0.95 };
        let mut params = ProblemParams {
            n: 0,
            k: 1,
            l: 1.0,
            u: 1.0,
            epsilon: 0.05,
            delta,
            g_bound: 1.0,
            mu: None,
        };
        let cap = theory_params_bn(&ProblemParams {
            n: 1,
            ..params.clone()
        })?
        .sparsity_cap();
        params.n = cap + rng.random_range(1..=40usize);
        let n = params.n;
        let vars = (0..n).map(|_| uniform(rng, delta * delta, 1.0)).collect();
        let cov = if delta >= 1.0 {
            CovarianceModel::identity(n)
        } else {
            CovarianceModel::diagonal(vars)?
        };
        let f = random_target(rng, n, 1, 1.0, 1.0)?;
        let pool: Vec<usize> = (0..n).filter(|i| !f.contains(*i)).collect();
        let s = random_subset(rng, &pool, cap);
        (params, cov, f, s)
    } else {
        let st = bn_setting(rng, true)?;
        let n = st.params.n;
        let nzf = st.f.support();
        let mut s;
        loop {
            let size = rng.random_range(0..n);
            s = random_subset(rng, &(0..n).collect::<Vec<_>>(), size);
            if nzf.iter().any(|i| s.binary_search(i).is_err()) {
                break;
            }
        }
        (st.params, st.cov, st.f, s)
    };
    let theory = theory_params_bn(&params)?;
    let n = params.n;
    let threshold =
        params.l * params.l * params.delta * params.delta / (4.0 * theory.cap_k * theory.cap_b);
    let fs = best_projection(&f, &s, &cov, None)?.projection;
    let norm = uniform(rng, 0.0, 1.0) * threshold;
    let eta = random_on(rng, n, &s, norm, &cov)?;
    let w = fs.add_scaled(1.0, &eta)?;
    if !s.is_empty() && w.max_abs() > theory.cap_b {
        return Ok(None);
    }
    let mut rep = cantaloupe(&f, &w, &s, &cov, &theory, &params, factor)?;
    rep.instance = describe(n, params.k, params.delta, s.len(), &cov);
    Ok(rep.precondition_met.then_some(rep))
}

struct OptSetting {
    k: usize,
    cov: CovarianceModel,
    f: SparseVector,
    cap_b: f64,
}

fn opt_setting(rng: &mut StreamRng) -> Result<OptSetting> {
    let k = rng.random_range(1..=4usize);
    let n = rng.random_range(k + 2..=30usize);
    let delta = 0.5;
    let rho = 1.0 / (2.0 * k as f64);
    let variance = uniform(rng, delta * delta, 1.0);
    let handle = make_incoherent(rho, delta, n, Structure::Equicorrelated { rho }, variance)?;
    let f = random_target(rng, n, k, 0.1, 1.0)?;
    Ok(OptSetting {
        k,
        cov: handle.covariance().clone(),
        f,
        cap_b: 10.0 * k as f64 / delta,
    })
}

fn attempt_date(rng: &mut StreamRng, factor: f64) -> Result<Attempt> {
    let st = opt_setting(rng)?;
    let n = st.cov.dim();
    let epsilon = uniform(rng, 0.005, 0.1);
    let nzf = st.f.support();
    let size = rng.random_range(0..nzf.len());
    let s = random_subset(rng, &nzf, size);
    let fs = best_projection(&st.f, &s, &st.cov, None)?.projection;
    let radius = epsilon.sqrt() / (2.0 * st.k as f64);
    let norm = uniform(rng, 0.0, 1.0) * radius;
    let eta = random_on(rng, n, &s, norm, &st.cov)?;
    let w = fs.add_scaled(1.0, &eta)?;
    let mut rep = date(&st.f, &w, &s, &st.cov, st.k, epsilon, st.cap_b, factor)?;
    rep.instance = format!(
        "{} eps={epsilon:.4}",
        describe(n, st.k, 0.5, s.len(), &st.cov)
    );
    Ok(rep.precondition_met.then_some(rep))
}

fn attempt_elderberry(rng: &mut StreamRng, factor: f64) -> Result<Attempt> {
    let st = opt_setting(rng)?;
    let n = st.cov.dim();
    let size = rng.random_range(0..=st.k);
    let s = random_subset(rng, &(0..n).collect::<Vec<_>>(), size);
    let fs = best_projection(&st.f, &s, &st.cov, None)?.projection;
    let nfs = st.cov.norm_sq(&fs)?.sqrt();
    let norm = uniform(rng, 0.0, 4.0) * nfs.max(0.05);
    let w = random_on(rng, n, &s, norm, &st.cov)?;
    if w.max_abs() > st.cap_b {
        return Ok(None);
    }
    let mut rep = elderberry(&st.f, &w, &s, &st.cov, st.k, st.cap_b, factor)?;
    rep.instance = describe(n, st.k, 0.5, s.len(), &st.cov);
    Ok(rep.precondition_met.then_some(rep))
}

/// One seeded claim instance. `factor` multiplies the required decrease;
/// anything other than 1 is a deliberately broken check.
pub fn claim_instance(
    claim: ClaimId,
    master_seed: u64,
    index: u64,
    factor: f64,
) -> Result<InstanceOutcome> {
    let mut rng = stream(master_seed, index, Purpose::Instance);
    for attempt in 1..=MAX_ATTEMPTS {
        let found = match claim {
            ClaimId::Apple => attempt_apple(&mut rng, factor)?,
            ClaimId::Banana => attempt_banana(&mut rng, factor)?,
            ClaimId::Cantaloupe => attempt_cantaloupe(&mut rng, factor)?,
            ClaimId::Date => attempt_date(&mut rng, factor)?,
            ClaimId::Elderberry => attempt_elderberry(&mut rng, factor)?,
        };
        if let Some(mut rep) = found {
            rep.instance = format!("{} attempts={attempt}", rep.instance);
            return Ok(InstanceOutcome::Report(Box::new(rep)));
        }
    }
    Ok(InstanceOutcome::Starved {
        attempts: MAX_ATTEMPTS,
    })
}

/// `instances` seeded instances of one claim, run in index order.
pub fn run_claim_suite(
    claim: ClaimId,
    instances: usize,
    master_seed: u64,
    factor: f64,
) -> Result<SuiteResult> {
    let outcomes = (0..instances as u64)
        .map(|i| Ok((i, claim_instance(claim, master_seed, i, factor)?)))
        .collect::<Result<_>>()?;
    Ok(SuiteResult {
        claim,
        master_seed,
        outcomes,
    })
}

/// One random `(w, Sigma)` pair for the coordinate-bound lemma.
pub fn lemma1_instance(master_seed: u64, index: u64) -> Result<Lemma1Report> {
    let mut rng = stream(master_seed, index, Purpose::Instance);
    let n = rng.random_range(2..=20usize);
    let delta = uniform(&mut rng, 0.2, 1.0);
    let cov = smooth_covariance(&mut rng, n, delta)?;
    let size = rng.random_range(1..=n);
    let s = random_subset(&mut rng, &(0..n).collect::<Vec<_>>(), size);
    let norm = uniform(&mut rng, 0.01, 10.0);
    let w = random_on(&mut rng, n, &s, norm, &cov)?;
    lemma1_check(&w, &cov, delta)
}

pub fn run_lemma1_suite(instances: usize, master_seed: u64) -> Result<Vec<Lemma1Report>> {
    (0..instances as u64)
        .map(|i| lemma1_instance(master_seed, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_deterministic() {
        for claim in ClaimId::ALL {
            let a = claim_instance(claim, 5, 3, 1.0).unwrap();
            let b = claim_instance(claim, 5, 3, 1.0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn small_suites_pass() {
        for claim in ClaimId::ALL {
            let res = run_claim_suite(claim, 20, 11, 1.0).unwrap();
            assert_eq!(res.starved(), 0);
            assert_eq!(res.failed(), 0, "{claim}");
            assert_eq!(res.passed(), 20, "{claim}");
        }
        assert!(run_lemma1_suite(50, 1)
            .unwrap()
            .iter()
            .all(|r| r.max_bound_holds && r.min_bound_holds));
    }
}
