//! Bounded, zero-mean input distributions with an exact covariance.
//!
//! Two families are supported:
//!
//! * **smooth**: `x = x~ + eta`, where `x~` comes from a bounded symmetric base
//!   and `eta` is uniform on `[-sqrt(3) Delta, sqrt(3) Delta]^n`, so every
//!   coordinate picks up exactly `Delta^2` of independent variance;
//! * **incoherent**: `x = A z` with `z` uniform on `[-sqrt(3), sqrt(3)]^n` and
//!   `A` the symmetric square root of an equicorrelated or banded target.
//!
//! Every handle carries its analytic [`CovarianceModel`] and a support radius
//! `G` computed from the construction, so `sum_i x_i^2 <= G^2` holds for every
//! emitted point.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::covariance::CovarianceModel;
use crate::error::{invalid, Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;
/// Relative inflation applied to computed support radii so that rounding in
/// the sampler can never push a point past `G`.
const RADIUS_SLACK: f64 = 1e-9;

/// Base distribution `D~` of a smooth construction.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseSpec {
    PointMass,
    /// Independent coordinates uniform on a box with the given per-coordinate variance.
    UniformBox {
        variance: f64,
    },
    /// Independent `+-scale` coordinates.
    Rademacher {
        scale: f64,
    },
    /// `x~ = M z` with `z` uniform on `[-sqrt(3), sqrt(3)]^r`.
    LowRank {
        factor: DMatrix<f64>,
    },
}

impl BaseSpec {
    /// A random `n x rank` factor whose rows are rescaled so that every
    /// coordinate of `x~` has second moment exactly `variance`.
    pub fn low_rank(n: usize, rank: usize, variance: f64, seed: u64) -> Result<Self> {
        if rank == 0 {
            return invalid("low-rank base needs rank >= 1");
        }
        if !(variance >= 0.0) {
            return invalid("base variance must be nonnegative");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::<f64>::from_fn(n, rank, |_, _| rng.sample(StandardNormal));
        for i in 0..n {
            let norm = m.row(i).norm();
            let scale = if norm > 0.0 {
                variance.sqrt() / norm
            } else {
                0.0
            };
            for j in 0..rank {
                m[(i, j)] *= scale;
            }
        }
        Ok(BaseSpec::LowRank { factor: m })
    }

    fn name(&self) -> &'static str {
        match self {
            BaseSpec::PointMass => "point-mass",
            BaseSpec::UniformBox { .. } => "uniform-box",
            BaseSpec::Rademacher { .. } => "rademacher",
            BaseSpec::LowRank { .. } => "low-rank",
        }
    }

    fn covariance(&self, n: usize) -> DMatrix<f64> {
        match self {
            BaseSpec::PointMass => DMatrix::zeros(n, n),
            BaseSpec::UniformBox { variance } => DMatrix::identity(n, n) * *variance,
            BaseSpec::Rademacher { scale } => DMatrix::identity(n, n) * (scale * scale),
            BaseSpec::LowRank { factor } => factor * factor.transpose(),
        }
    }

    fn is_diagonal(&self) -> bool {
        !matches!(self, BaseSpec::LowRank { .. })
    }

    fn support_radius(&self, n: usize) -> f64 {
        match self {
            BaseSpec::PointMass => 0.0,
            BaseSpec::UniformBox { variance } => (3.0 * variance * n as f64).sqrt(),
            BaseSpec::Rademacher { scale } => scale.abs() * (n as f64).sqrt(),
            BaseSpec::LowRank { factor } => {
                let gram = factor.transpose() * factor;
                let top = SymmetricEigen::new(gram)
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(0.0, f64::max);
                top.sqrt() * (3.0 * factor.ncols() as f64).sqrt()
            }
        }
    }
}

/// Correlation pattern of an incoherent construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Structure {
    /// `corr(x_i, x_j) = rho` for all `i != j`.
    Equicorrelated { rho: f64 },
    /// `corr(x_i, x_{i+1}) = rho`, zero beyond the first off-diagonal.
    Banded { rho: f64 },
}

impl Structure {
    pub fn rho(&self) -> f64 {
        match *self {
            Structure::Equicorrelated { rho } | Structure::Banded { rho } => rho,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    Smooth { base: BaseSpec },
    Incoherent { structure: Structure, variance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Sampler {
    Smooth {
        base: BaseSpec,
        noise_half_width: f64,
    },
    /// `x = a z + b (sum z) 1`.
    Equicorrelated {
        a: f64,
        b: f64,
    },
    Dense {
        root: DMatrix<f64>,
    },
}

/// A sampleable distribution together with its exact second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionHandle {
    kind: DistributionKind,
    dim: usize,
    delta: f64,
    g_bound: f64,
    mu: Option<f64>,
    covariance: CovarianceModel,
    sampler: Sampler,
}

/// Builds a `Delta`-smooth distribution from `base` plus uniform noise.
pub fn make_smooth(base: BaseSpec, delta: f64, n: usize) -> Result<DistributionHandle> {
    if n == 0 {
        return invalid("dimension must be positive");
    }
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    match &base {
        BaseSpec::UniformBox { variance } if !(*variance >= 0.0) => {
            return invalid("uniform-box variance must be nonnegative")
        }
        BaseSpec::LowRank { factor } if factor.nrows() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: factor.nrows(),
            })
        }
        _ => {}
    }
    let d2 = delta * delta;
    let mut sigma = base.covariance(n);
    for i in 0..n {
        sigma[(i, i)] += d2;
        if sigma[(i, i)] > 1.0 + 1e-12 {
            return Err(Error::NicenessViolation(format!(
                "E[x_{}^2] = {} exceeds 1 ({} base + {} noise)",
                i + 1,
                sigma[(i, i)],
                sigma[(i, i)] - d2,
                d2
            )));
        }
    }
    let covariance = if base.is_diagonal() {
        CovarianceModel::diagonal((0..n).map(|i| sigma[(i, i)]).collect())?
    } else {
        CovarianceModel::dense(sigma)?
    };
    let radius = base.support_radius(n) + (3.0 * n as f64).sqrt() * delta;
    Ok(DistributionHandle {
        kind: DistributionKind::Smooth { base: base.clone() },
        dim: n,
        delta,
        g_bound: radius * (1.0 + RADIUS_SLACK),
        mu: None,
        covariance,
        sampler: Sampler::Smooth {
            base,
            noise_half_width: SQRT3 * delta,
        },
    })
}

/// Builds a `mu`-incoherent `(Delta, G)`-nice distribution with diagonal
/// second moments equal to `variance`.
pub fn make_incoherent(
    mu: f64,
    delta: f64,
    n: usize,
    structure: Structure,
    variance: f64,
) -> Result<DistributionHandle> {
    if n == 0 {
        return invalid("dimension must be positive");
    }
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    let rho = structure.rho();
    if !(rho >= 0.0) {
        return invalid(format!("rho must be nonnegative, got {rho}"));
    }
    if rho > mu {
        return invalid(format!("rho = {rho} exceeds the coherence bound mu = {mu}"));
    }
    if !(variance >= delta * delta - 1e-15 && variance <= 1.0) {
        return Err(Error::NicenessViolation(format!(
            "variance {variance} outside [Delta^2, 1] = [{}, 1]",
            delta * delta
        )));
    }
    let sigma2 = variance;
    let (sigma, sampler, op_norm) = match structure {
        Structure::Equicorrelated { rho } => {
            if rho >= 1.0 {
                return invalid("equicorrelated covariance with rho >= 1 is not positive definite");
            }
            let nf = n as f64;
            let top = sigma2 * (1.0 - rho + nf * rho);
            let a = (sigma2 * (1.0 - rho)).sqrt();
            let b = (top.sqrt() - a) / nf;
            let sigma = DMatrix::from_fn(n, n, |i, j| if i == j { sigma2 } else { sigma2 * rho });
            (sigma, Sampler::Equicorrelated { a, b }, top.sqrt().max(a))
        }
        Structure::Banded { rho } => {
            // Eigenpairs of the symmetric tridiagonal Toeplitz matrix are known
            // in closed form: lambda_j = s2 (1 + 2 rho cos(j pi / (n+1))),
            // v_j(i) = sqrt(2/(n+1)) sin(i j pi / (n+1)).
            let nf = n as f64 + 1.0;
            let lambdas: Vec<f64> = (1..=n)
                .map(|j| sigma2 * (1.0 + 2.0 * rho * (j as f64 * PI / nf).cos()))
                .collect();
            if lambdas.iter().any(|&l| l <= 0.0) {
                return invalid(format!(
                    "banded covariance with rho = {rho} is not positive definite"
                ));
            }
            let norm = (2.0 / nf).sqrt();
            let basis = DMatrix::from_fn(n, n, |i, j| {
                norm * (((i + 1) * (j + 1)) as f64 * PI / nf).sin()
            });
            let mut scaled = basis.clone();
            for j in 0..n {
                let s = lambdas[j].sqrt();
                for i in 0..n {
                    scaled[(i, j)] *= s;
                }
            }
            let root = &scaled * basis.transpose();
            let sigma = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    sigma2
                } else if i.abs_diff(j) == 1 {
                    sigma2 * rho
                } else {
                    0.0
                }
            });
            let top = lambdas.iter().cloned().fold(0.0, f64::max).sqrt();
            (sigma, Sampler::Dense { root }, top)
        }
    };
    let covariance = if rho == 0.0 {
        CovarianceModel::diagonal(vec![sigma2; n])?
    } else {
        CovarianceModel::dense(sigma)?
    };
    let g = op_norm * (3.0 * n as f64).sqrt();
    Ok(DistributionHandle {
        kind: DistributionKind::Incoherent {
            structure,
            variance: sigma2,
        },
        dim: n,
        delta,
        g_bound: g * (1.0 + RADIUS_SLACK),
        mu: Some(mu),
        covariance,
        sampler,
    })
}

impl DistributionHandle {
    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, DistributionKind::Smooth { .. })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn g_bound(&self) -> f64 {
        self.g_bound
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    pub fn covariance(&self) -> &CovarianceModel {
        &self.covariance
    }

    /// Short human-readable descriptor, e.g. `smooth(point-mass, delta=0.5)`.
    pub fn describe(&self) -> String {
        match &self.kind {
            DistributionKind::Smooth { base } => {
                format!("smooth({}, delta={})", base.name(), self.delta)
            }
            DistributionKind::Incoherent {
                structure,
                variance,
            } => {
                let (name, rho) = match structure {
                    Structure::Equicorrelated { rho } => ("equicorrelated", rho),
                    Structure::Banded { rho } => ("banded", rho),
                };
                format!(
                    "incoherent({name}, rho={rho}, variance={variance}, delta={})",
                    self.delta
                )
            }
        }
    }

    fn draw_row<R: Rng>(&self, rng: &mut R, unit: &Uniform<f64>, row: &mut [f64]) {
        match &self.sampler {
            Sampler::Smooth {
                base,
                noise_half_width,
            } => {
                match base {
                    BaseSpec::PointMass => row.iter_mut().for_each(|x| *x = 0.0),
                    BaseSpec::UniformBox { variance } => {
                        let h = SQRT3 * variance.sqrt();
                        for x in row.iter_mut() {
                            *x = h * unit.sample(rng);
                        }
                    }
                    BaseSpec::Rademacher { scale } => {
                        for x in row.iter_mut() {
                            *x = if rng.random_bool(0.5) {
                                *scale
                            } else {
                                -*scale
                            };
                        }
                    }
                    BaseSpec::LowRank { factor } => {
                        let z: Vec<f64> = (0..factor.ncols())
                            .map(|_| SQRT3 * unit.sample(rng))
                            .collect();
                        for (i, x) in row.iter_mut().enumerate() {
                            *x = factor.row(i).iter().zip(&z).map(|(m, z)| m * z).sum();
                        }
                    }
                }
                for x in row.iter_mut() {
                    *x += noise_half_width * unit.sample(rng);
                }
            }
            Sampler::Equicorrelated { a, b } => {
                let mut total = 0.0;
                for x in row.iter_mut() {
                    *x = SQRT3 * unit.sample(rng);
                    total += *x;
                }
                let shift = b * total;
                for x in row.iter_mut() {
                    *x = a * *x + shift;
                }
            }
            Sampler::Dense { root } => {
                let z: Vec<f64> = (0..self.dim).map(|_| SQRT3 * unit.sample(rng)).collect();
                for (i, x) in row.iter_mut().enumerate() {
                    *x = root.row(i).iter().zip(&z).map(|(m, z)| m * z).sum();
                }
            }
        }
    }
}

/// `s` i.i.d. draws, stored column-major so that per-coordinate scans are
/// contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    count: usize,
    dim: usize,
    seed: u64,
    data: Vec<f64>,
}

impl SampleBatch {
    /// Wraps explicit rows (used for hand-built fixtures).
    pub fn from_rows(rows: &[Vec<f64>], seed: u64) -> Result<Self> {
        let count = rows.len();
        if count == 0 {
            return invalid("a batch needs at least one row");
        }
        let dim = rows[0].len();
        let mut data = vec![0.0; count * dim];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                data[j * count + i] = x;
            }
        }
        Ok(Self {
            count,
            dim,
            seed,
            data,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.count + row]
    }

    /// All `s` values of coordinate `col`.
    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.count..(col + 1) * self.count]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        (0..self.dim).map(|j| self.get(row, j)).collect()
    }

    /// Raw column-major values; identical batches compare equal bitwise.
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Writes a CSV with header `x1,...,xn` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|j| format!("x{j}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.count {
            let row: Vec<String> = (0..self.dim)
                .map(|j| format!("{:.16e}", self.get(i, j)))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Draws `count` i.i.d. points; deterministic in `seed`.
///
/// # Panics
///
/// Panics if a drawn point violates the support bound `G`, which would mean the
/// construction's radius is wrong.
pub fn sample(handle: &DistributionHandle, count: usize, seed: u64) -> Result<SampleBatch> {
    if count == 0 {
        return invalid("sample size must be at least 1");
    }
    let n = handle.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new_inclusive(-1.0, 1.0).expect("valid unit interval");
    let mut data = vec![0.0; count * n];
    let mut row = vec![0.0; n];
    let g2 = handle.g_bound * handle.g_bound;
    for i in 0..count {
        handle.draw_row(&mut rng, &unit, &mut row);
        let norm2: f64 = row.iter().map(|x| x * x).sum();
        assert!(
            norm2 <= g2,
            "sample {} has squared norm {} above G^2 = {}",
            i,
            norm2,
            g2
        );
        for (j, &x) in row.iter().enumerate() {
            data[j * count + i] = x;
        }
    }
    Ok(SampleBatch {
        count,
        dim: n,
        seed,
        data,
    })
}

/// Empirical check of the niceness conditions on one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct NicenessReport {
    /// `max_j |mean(x_j)|` and the tolerance it was judged against.
    pub mean_deviation: f64,
    pub mean_tolerance: f64,
    pub mean_ok: bool,
    pub second_moment_min: f64,
    pub second_moment_max: f64,
    pub second_moment_tolerance: f64,
    /// Every empirical `E[x_j^2]` lies in `[Delta^2, 1]` up to tolerance.
    pub second_moment_ok: bool,
    pub max_row_norm: f64,
    pub support_ok: bool,
    /// Largest empirical `|corr(x_i, x_j)|`.
    pub coherence: f64,
    pub coherence_tolerance: f64,
    /// Always true for smooth handles (no coherence requirement).
    pub coherence_ok: bool,
}

impl NicenessReport {
    pub fn all_ok(&self) -> bool {
        self.mean_ok && self.second_moment_ok && self.support_ok && self.coherence_ok
    }
}

/// Compares a batch with the handle's niceness conditions. Statistical items
/// use a five-standard-error tolerance.
pub fn check_niceness(handle: &DistributionHandle, batch: &SampleBatch) -> Result<NicenessReport> {
    if batch.dim() != handle.dim {
        return Err(Error::DimensionMismatch {
            expected: handle.dim,
            actual: batch.dim(),
        });
    }
    let s = batch.count() as f64;
    let n = batch.dim();
    let mut means = Vec::with_capacity(n);
    let mut moments = Vec::with_capacity(n);
    let mut mean_tol: f64 = 0.0;
    let mut moment_tol: f64 = 0.0;
    for j in 0..n {
        let col = batch.column(j);
        let mean = col.iter().sum::<f64>() / s;
        let m2 = col.iter().map(|x| x * x).sum::<f64>() / s;
        let m4 = col.iter().map(|x| x.powi(4)).sum::<f64>() / s;
        mean_tol = mean_tol.max(5.0 * (m2 / s).sqrt());
        moment_tol = moment_tol.max(5.0 * ((m4 - m2 * m2).max(0.0) / s).sqrt());
        means.push(mean);
        moments.push(m2);
    }
    let mean_deviation = means.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let second_moment_min = moments.iter().cloned().fold(f64::INFINITY, f64::min);
    let second_moment_max = moments.iter().cloned().fold(0.0, f64::max);
    let d2 = handle.delta * handle.delta;

    let mut max_row_norm: f64 = 0.0;
    let mut norms = vec![0.0; batch.count()];
    for j in 0..n {
        for (acc, x) in norms.iter_mut().zip(batch.column(j)) {
            *acc += x * x;
        }
    }
    for v in norms {
        max_row_norm = max_row_norm.max(v.sqrt());
    }

    let mut coherence: f64 = 0.0;
    for i in 0..n {
        let ci = batch.column(i);
        for j in 0..i {
            let cj = batch.column(j);
            let cross = ci.iter().zip(cj).map(|(a, b)| a * b).sum::<f64>() / s;
            let cov = cross - means[i] * means[j];
            let vi = moments[i] - means[i] * means[i];
            let vj = moments[j] - means[j] * means[j];
            if vi > 0.0 && vj > 0.0 {
                coherence = coherence.max((cov / (vi * vj).sqrt()).abs());
            }
        }
    }
    let coherence_tolerance = 5.0 / s.sqrt();
    let coherence_ok = match handle.mu {
        Some(mu) if !handle.is_smooth() => coherence <= mu + coherence_tolerance,
        _ => true,
    };
    Ok(NicenessReport {
        mean_deviation,
        mean_tolerance: mean_tol,
        mean_ok: mean_deviation <= mean_tol,
        second_moment_min,
        second_moment_max,
        second_moment_tolerance: moment_tol,
        second_moment_ok: second_moment_min >= d2 - moment_tol
            && second_moment_max <= 1.0 + moment_tol,
        max_row_norm,
        support_ok: max_row_norm <= handle.g_bound,
        coherence,
        coherence_tolerance,
        coherence_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_noise_has_identity_covariance() {
        let h = make_smooth(BaseSpec::PointMass, 1.0, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(h.covariance().entry(i, j), want);
            }
        }
        assert!((h.g_bound() - 12f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn variances_add() {
        let h = make_smooth(BaseSpec::UniformBox { variance: 0.5 }, 0.5, 3).unwrap();
        for i in 0..3 {
            assert_eq!(h.covariance().variance(i), 0.75);
        }
    }

    #[test]
    fn niceness_violation_when_moment_exceeds_one() {
        let err = make_smooth(BaseSpec::UniformBox { variance: 0.9 }, 0.5, 3).unwrap_err();
        assert!(matches!(err, Error::NicenessViolation(_)));
    }

    #[test]
    fn equicorrelated_off_diagonal() {
        let h = make_incoherent(0.2, 0.5, 3, Structure::Equicorrelated { rho: 0.1 }, 1.0).unwrap();
        assert!((h.covariance().entry(0, 1) - 0.1).abs() < 1e-15);
        assert!((h.covariance().coherence() - 0.1).abs() < 1e-15);
        let h0 = make_incoherent(0.2, 0.5, 3, Structure::Equicorrelated { rho: 0.0 }, 1.0).unwrap();
        assert_eq!(h0.covariance().coherence(), 0.0);
    }

    #[test]
    fn incoherent_argument_errors() {
        assert!(make_incoherent(1.0, 0.5, 3, Structure::Equicorrelated { rho: 1.0 }, 1.0).is_err());
        assert!(make_incoherent(0.1, 0.5, 3, Structure::Equicorrelated { rho: 0.2 }, 1.0).is_err());
        assert!(make_incoherent(0.9, 0.5, 4, Structure::Banded { rho: 0.8 }, 1.0).is_err());
        assert!(make_incoherent(0.1, 0.5, 4, Structure::Banded { rho: 0.1 }, 0.2).is_err());
    }

    #[test]
    fn same_seed_same_bytes() {
        let h = make_smooth(BaseSpec::low_rank(6, 2, 0.4, 9).unwrap(), 0.5, 6).unwrap();
        let a = sample(&h, 50, 17).unwrap();
        let b = sample(&h, 50, 17).unwrap();
        let bits_a: Vec<u64> = a.values().iter().map(|x| x.to_bits()).collect();
        let bits_b: Vec<u64> = b.values().iter().map(|x| x.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
        assert_ne!(a, sample(&h, 50, 18).unwrap());
    }

    #[test]
    fn vanishing_noise_gives_near_zero_rows() {
        let h = make_smooth(BaseSpec::PointMass, 1e-6, 5).unwrap();
        let b = sample(&h, 20, 1).unwrap();
        assert!(b.values().iter().all(|x| x.abs() <= 2e-6));
    }

    #[test]
    fn zero_count_is_rejected() {
        let h = make_smooth(BaseSpec::PointMass, 0.5, 2).unwrap();
        assert!(sample(&h, 0, 1).is_err());
    }

    #[test]
    fn injected_outlier_fails_support_item() {
        let h = make_smooth(BaseSpec::PointMass, 0.5, 3).unwrap();
        let b = sample(&h, 1000, 4).unwrap();
        let mut rows: Vec<Vec<f64>> = (0..b.count()).map(|i| b.row(i)).collect();
        let scale = 10.0 * h.g_bound() / rows[0].iter().map(|x| x * x).sum::<f64>().sqrt();
        rows[0].iter_mut().for_each(|x| *x *= scale);
        let bad = SampleBatch::from_rows(&rows, 4).unwrap();
        let report = check_niceness(&h, &bad).unwrap();
        assert!(!report.support_ok);
        assert!(check_niceness(&h, &b).unwrap().support_ok);
    }

    #[test]
    fn csv_header_and_precision() {
        let b = SampleBatch::from_rows(&[vec![0.1, -2.0]], 0).unwrap();
        let mut out = Vec::new();
        b.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "x1,x2\n1.0000000000000001e-1,-2.0000000000000000e0\n");
    }
}
