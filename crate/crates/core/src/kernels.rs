//! Stationary covariance kernels, mean sequences, and process models.
//!
//! A [`ProcessModel`] is a mean sequence `m(t)` plus a covariance kernel
//! `K(t,s) = k(t-s) + P(t,s)`, where `k` is a stationary kernel with spectral
//! density `f` and `P` an optional summable perturbation. The pair
//! `(m_inf, k)` is the asymptotic target of the model. All indices are
//! nonnegative: matrices and vectors are indexed by `0..t`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Grid size used for the `f >= 0` positive-definiteness proxy.
pub const PSD_GRID: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    White,
    Ar1 { theta: f64 },
    Ma { coeffs: Vec<f64>, acov: Vec<f64> },
    Table { values: Vec<f64> },
}

/// A stationary covariance function `k` together with its spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    kind: Kind,
}

impl KernelSpec {
    /// `k = delta_0`, `f = 1`.
    pub fn white() -> Self {
        KernelSpec { kind: Kind::White }
    }

    /// Stationary AR(1) kernel `k(t) = theta^|t| / (1 - theta^2)`.
    pub fn ar1(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta.abs() >= 1.0 {
            return Err(Error::InvalidKernel(format!(
                "ar1 requires |theta| < 1, got {theta}"
            )));
        }
        Ok(KernelSpec {
            kind: Kind::Ar1 { theta },
        })
    }

    /// Moving-average kernel of `Y_t = sum_j b_j eps_{t-j}`: `k(h) = sum_j b_j b_{j+|h|}`.
    pub fn ma(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidKernel(
                "ma requires a nonempty list of finite coefficients".into(),
            ));
        }
        let q = coeffs.len();
        let acov = (0..q)
            .map(|h| (0..q - h).map(|j| coeffs[j] * coeffs[j + h]).sum())
            .collect();
        Ok(KernelSpec {
            kind: Kind::Ma { coeffs, acov },
        })
    }

    /// Finite symmetric table `k(0), k(1), .., k(T)`, zero beyond `T`.
    ///
    /// Rejected when the cosine sum is negative somewhere on the
    /// [`PSD_GRID`]-point frequency grid.
    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidKernel(
                "table requires a nonempty list of finite values".into(),
            ));
        }
        let kernel = KernelSpec {
            kind: Kind::Table { values },
        };
        let floor = -1e-12 * kernel.k(0).abs().max(1.0);
        if let Some(j) = (0..PSD_GRID).find(|&j| {
            kernel.spectral_density(2.0 * PI * j as f64 / PSD_GRID as f64) < floor
        }) {
            return Err(Error::InvalidKernel(format!(
                "table spectral density is negative at grid point {j}"
            )));
        }
        Ok(kernel)
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::White => "white",
            Kind::Ar1 { .. } => "ar1",
            Kind::Ma { .. } => "ma",
            Kind::Table { .. } => "table",
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self.kind {
            Kind::Ar1 { theta } => Some(theta),
            _ => None,
        }
    }

    pub fn ma_coeffs(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Ma { coeffs, .. } => Some(coeffs),
            _ => None,
        }
    }

    /// The stationary covariance `k(lag)`; symmetric in `lag`.
    pub fn k(&self, lag: i64) -> f64 {
        let h = lag.unsigned_abs() as usize;
        match &self.kind {
            Kind::White => {
                if h == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Ar1 { theta } => theta.powi(h as i32) / (1.0 - theta * theta),
            Kind::Ma { acov, .. } => acov.get(h).copied().unwrap_or(0.0),
            Kind::Table { values } => values.get(h).copied().unwrap_or(0.0),
        }
    }

    /// Largest lag with a possibly nonzero value, `None` for infinite support.
    pub fn support(&self) -> Option<usize> {
        match &self.kind {
            Kind::White => Some(0),
            Kind::Ar1 { theta } => {
                if *theta == 0.0 {
                    Some(0)
                } else {
                    None
                }
            }
            Kind::Ma { acov, .. } => Some(acov.len() - 1),
            Kind::Table { values } => Some(values.len() - 1),
        }
    }

    /// `f(lambda) = sum_t e^{i lambda t} k(t)`.
    pub fn spectral_density(&self, lambda: f64) -> f64 {
        match &self.kind {
            Kind::White => 1.0,
            Kind::Ar1 { theta } => 1.0 / (1.0 + theta * theta - 2.0 * theta * lambda.cos()),
            Kind::Ma { acov, .. } => cosine_sum(acov, lambda),
            Kind::Table { values } => cosine_sum(values, lambda),
        }
    }

    /// `M = sum_t |k(t)|`.
    pub fn abs_sum(&self) -> f64 {
        match &self.kind {
            Kind::White => 1.0,
            Kind::Ar1 { theta } => {
                let a = theta.abs();
                (1.0 / (1.0 - theta * theta)) * (1.0 + 2.0 * a / (1.0 - a))
            }
            Kind::Ma { acov, .. } => two_sided_abs_sum(acov),
            Kind::Table { values } => two_sided_abs_sum(values),
        }
    }

    /// `sum_{|t| > lag} |k(t)|`.
    pub fn tail_abs_sum(&self, lag: usize) -> f64 {
        match &self.kind {
            Kind::Ar1 { theta } => {
                let a = theta.abs();
                2.0 * a.powi(lag as i32 + 1) / ((1.0 - theta * theta) * (1.0 - a))
            }
            _ => {
                let support = self.support().unwrap_or(0);
                2.0 * (lag + 1..=support)
                    .map(|h| self.k(h as i64).abs())
                    .sum::<f64>()
            }
        }
    }

    /// Toeplitz matrix `H_t(s, r) = k(s - r)`.
    pub fn toeplitz(&self, t: usize) -> SymMatrix {
        let lags: Vec<f64> = (0..t).map(|h| self.k(h as i64)).collect();
        SymMatrix::from_fn(t, |s, r| lags[s - r])
    }
}

fn cosine_sum(lags: &[f64], lambda: f64) -> f64 {
    lags[0]
        + 2.0
            * lags
                .iter()
                .enumerate()
                .skip(1)
                .map(|(h, v)| v * (lambda * h as f64).cos())
                .sum::<f64>()
}

fn two_sided_abs_sum(lags: &[f64]) -> f64 {
    lags[0].abs() + 2.0 * lags[1..].iter().map(|v| v.abs()).sum::<f64>()
}

/// Mean sequence of the process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanSpec {
    /// `m(t) = m_inf`.
    Constant(f64),
    /// `m(t) = (-1)^t m_inf`.
    Alternating(f64),
    /// `m(t) = m_inf + c rho^t`, `0 < rho < 1`.
    Decaying { m_inf: f64, c: f64, rho: f64 },
}

impl MeanSpec {
    pub fn zero() -> Self {
        MeanSpec::Constant(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            MeanSpec::Constant(m) | MeanSpec::Alternating(m) => m.is_finite(),
            MeanSpec::Decaying { m_inf, c, rho } => {
                if !(rho > 0.0 && rho < 1.0) {
                    return Err(Error::InvalidModel(format!(
                        "decaying mean requires 0 < rho < 1, got {rho}"
                    )));
                }
                m_inf.is_finite() && c.is_finite()
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidModel("mean parameters must be finite".into()))
        }
    }

    pub fn m(&self, t: usize) -> f64 {
        match *self {
            MeanSpec::Constant(m) => m,
            MeanSpec::Alternating(m) => {
                if t.is_multiple_of(2) {
                    m
                } else {
                    -m
                }
            }
            MeanSpec::Decaying { m_inf, c, rho } => m_inf + c * rho.powi(t as i32),
        }
    }

    pub fn m_inf(&self) -> f64 {
        match *self {
            MeanSpec::Constant(m) | MeanSpec::Alternating(m) => m,
            MeanSpec::Decaying { m_inf, .. } => m_inf,
        }
    }

    /// The asymptotic mean sequence: `m_inf`, or `(-1)^t m_inf` for the alternating kind.
    pub fn target(&self, t: usize) -> f64 {
        match *self {
            MeanSpec::Alternating(m) => MeanSpec::Alternating(m).m(t),
            _ => self.m_inf(),
        }
    }

    /// Frequency at which the limit of the mean term reads the spectral density.
    pub fn mean_frequency(&self) -> f64 {
        match self {
            MeanSpec::Alternating(_) => PI,
            _ => 0.0,
        }
    }

    /// `sup_{t >= 0} |m(t)|`.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            MeanSpec::Constant(m) | MeanSpec::Alternating(m) => m.abs(),
            MeanSpec::Decaying { m_inf, c, .. } => (m_inf + c).abs().max(m_inf.abs()),
        }
    }

    pub fn vector(&self, t: usize) -> Vec<f64> {
        (0..t).map(|s| self.m(s)).collect()
    }
}

/// Nonstationary part of the covariance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Perturbation {
    #[default]
    None,
    /// `P(s, r) = c rho^s rho^r`, rank one; `c >= 0`, `|rho| < 1`.
    Separable { c: f64, rho: f64 },
}

impl Perturbation {
    pub fn p(&self, s: usize, r: usize) -> f64 {
        match *self {
            Perturbation::None => 0.0,
            Perturbation::Separable { c, rho } => c * rho.powi(s as i32) * rho.powi(r as i32),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Perturbation::None => Ok(()),
            Perturbation::Separable { c, rho } => {
                if !(c >= 0.0 && c.is_finite()) || !(rho.abs() < 1.0) {
                    Err(Error::InvalidModel(format!(
                        "separable perturbation requires c >= 0 and |rho| < 1, got c = {c}, rho = {rho}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Gaussian process with mean `m(t)` and covariance `K(t,s) = k(t-s) + P(t,s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel {
    pub mean: MeanSpec,
    pub kernel: KernelSpec,
    pub perturbation: Perturbation,
}

/// Mean vector and covariance matrix of `(X_0, .., X_{t-1})` given `X_0 = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedStart {
    pub x: f64,
    pub mean: Vec<f64>,
    pub cov: SymMatrix,
}

/// Finite-truncation diagnostics of the five hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisReport {
    pub t: usize,
    /// `sup_{s<t} |m(s)|`.
    pub sup_mean: f64,
    /// Maximum absolute row sum of `K_t`.
    pub max_row_abs_sum: f64,
    /// `sum_{|s| <= t} |k(s)|`.
    pub kernel_abs_sum: f64,
    /// `(1/t) sum_{s<t} |m(s) - target(s)|`.
    pub mean_gap: f64,
    /// `(1/t) sum_{s,r<t} |K(s,r) - k(r-s)|`.
    pub covariance_gap: f64,
}

impl ProcessModel {
    pub fn new(mean: MeanSpec, kernel: KernelSpec, perturbation: Perturbation) -> Result<Self> {
        mean.validate()?;
        perturbation.validate()?;
        Ok(ProcessModel {
            mean,
            kernel,
            perturbation,
        })
    }

    pub fn stationary(kernel: KernelSpec, mean: MeanSpec) -> Result<Self> {
        Self::new(mean, kernel, Perturbation::None)
    }

    /// True when `K_t` is exactly the Toeplitz matrix `H_t`.
    pub fn is_toeplitz(&self) -> bool {
        self.perturbation == Perturbation::None
    }

    pub fn covariance(&self, s: usize, r: usize) -> f64 {
        self.kernel.k(r as i64 - s as i64) + self.perturbation.p(s, r)
    }

    pub fn mean_vector(&self, t: usize) -> Vec<f64> {
        self.mean.vector(t)
    }

    /// `K_t(s, r) = k(r - s) + P(s, r)` for `s, r < t`.
    pub fn covariance_matrix(&self, t: usize) -> SymMatrix {
        if self.is_toeplitz() {
            return self.kernel.toeplitz(t);
        }
        SymMatrix::from_fn(t, |s, r| self.covariance(s, r))
    }

    /// Law of the first `t` coordinates given `X_0 = x`.
    ///
    /// Mean `m(s) + K(0,s)/K(0,0) (x - m(0))`, covariance
    /// `K(s,r) - K(s,0) K(r,0) / K(0,0)`. Row and column 0 of the covariance
    /// are set to exactly zero and the mean at 0 to exactly `x`.
    pub fn condition_on_start(&self, x: f64, t: usize) -> Result<ConditionedStart> {
        let k00 = self.covariance(0, 0);
        if !(k00 > 1e-12) {
            return Err(Error::ZeroStartVariance(k00));
        }
        let m0 = self.mean.m(0);
        let k0: Vec<f64> = (0..t).map(|s| self.covariance(0, s)).collect();
        let mean = (0..t)
            .map(|s| {
                if s == 0 {
                    x
                } else {
                    self.mean.m(s) + k0[s] / k00 * (x - m0)
                }
            })
            .collect();
        let cov = SymMatrix::from_fn(t, |s, r| {
            if s == 0 || r == 0 {
                0.0
            } else {
                self.covariance(s, r) - k0[s] * k0[r] / k00
            }
        });
        Ok(ConditionedStart { x, mean, cov })
    }

    pub fn hypothesis_report(&self, t: usize) -> HypothesisReport {
        let cov = self.covariance_matrix(t);
        let max_row_abs_sum = (0..t)
            .map(|s| cov.row(s).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let kernel_abs_sum =
            self.kernel.k(0).abs() + 2.0 * (1..=t).map(|h| self.kernel.k(h as i64).abs()).sum::<f64>();
        let tf = t as f64;
        let sup_mean = (0..t).map(|s| self.mean.m(s).abs()).fold(0.0, f64::max);
        let mean_gap = (0..t)
            .map(|s| (self.mean.m(s) - self.mean.target(s)).abs())
            .sum::<f64>()
            / tf;
        let covariance_gap = match self.perturbation {
            Perturbation::None => 0.0,
            p => {
                let mut total = 0.0;
                for s in 0..t {
                    for r in 0..t {
                        total += p.p(s, r).abs();
                    }
                }
                total / tf
            }
        };
        HypothesisReport {
            t,
            sup_mean,
            max_row_abs_sum,
            kernel_abs_sum,
            mean_gap,
            covariance_gap,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn white_density_is_one() {
        for j in 0..16 {
            assert_eq!(KernelSpec::white().spectral_density(j as f64 * 0.4), 1.0);
        }
    }

    #[test]
    fn ar1_density_closed_form_values() {
        let k = KernelSpec::ar1(0.5).unwrap();
        assert_abs_diff_eq!(k.spectral_density(0.0), 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(k.spectral_density(PI), 1.0 / 2.25, epsilon = 1e-14);
    }

    #[test]
    fn ar1_abs_sum_matches_series() {
        for &theta in &[-0.9, -0.5, 0.25, 0.5, 0.9] {
            let k = KernelSpec::ar1(theta).unwrap();
            let series: f64 = (-2000i64..=2000).map(|h| k.k(h).abs()).sum();
            assert_abs_diff_eq!(k.abs_sum(), series, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(KernelSpec::ar1(0.5).unwrap().abs_sum(), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn ar1_closed_form_matches_truncated_cosine_sum() {
        for &theta in &[-0.9, -0.25, 0.5, 0.9] {
            let kernel = KernelSpec::ar1(theta).unwrap();
            let mut lag = 1;
            while kernel.tail_abs_sum(lag) >= 1e-12 {
                lag += 1;
            }
            let lags: Vec<f64> = (0..=lag).map(|h| kernel.k(h as i64)).collect();
            for j in 0..PSD_GRID {
                let lambda = 2.0 * PI * j as f64 / PSD_GRID as f64;
                let diff = (kernel.spectral_density(lambda) - cosine_sum(&lags, lambda)).abs();
                assert!(diff < 1e-10, "theta {theta} j {j}: {diff}");
            }
        }
    }

    #[test]
    fn density_is_symmetric_about_pi() {
        let kernels = [
            KernelSpec::ar1(0.7).unwrap(),
            KernelSpec::ma(vec![1.0, -0.4, 0.3]).unwrap(),
            KernelSpec::table(vec![2.0, 0.5, 0.25]).unwrap(),
        ];
        for k in &kernels {
            for j in 0..64 {
                let lambda = j as f64 * 0.1;
                let diff = k.spectral_density(lambda) - k.spectral_density(2.0 * PI - lambda);
                assert!(diff.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ma_autocovariance() {
        let k = KernelSpec::ma(vec![1.0, 1.0]).unwrap();
        assert_eq!(k.k(0), 2.0);
        assert_eq!(k.k(1), 1.0);
        assert_eq!(k.k(-1), 1.0);
        assert_eq!(k.k(2), 0.0);
        assert_abs_diff_eq!(k.spectral_density(PI), 0.0, epsilon = 1e-14);
        assert_eq!(k.abs_sum(), 4.0);
    }

    #[test]
    fn table_rejects_indefinite_symbol() {
        assert!(KernelSpec::table(vec![1.0, 1.0]).is_err());
        assert!(KernelSpec::table(vec![2.0, 1.0]).is_ok());
        assert!(KernelSpec::ar1(1.0).is_err());
    }

    #[test]
    fn covariance_matrix_examples() {
        let white = ProcessModel::stationary(KernelSpec::white(), MeanSpec::zero()).unwrap();
        assert_eq!(white.covariance_matrix(2), SymMatrix::identity(2));

        let ar = ProcessModel::stationary(KernelSpec::ar1(0.5).unwrap(), MeanSpec::zero()).unwrap();
        let k2 = ar.covariance_matrix(2);
        assert_abs_diff_eq!(k2.get(0, 0), 4.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k2.get(0, 1), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k2.get(1, 1), 4.0 / 3.0, epsilon = 1e-15);

        let k3 = ar.covariance_matrix(3);
        for s in 0..3 {
            for r in 0..3 {
                assert_eq!(k3.get(s, r), ar.kernel.k(s as i64 - r as i64));
            }
        }
    }

    #[test]
    fn perturbed_covariance_is_symmetric() {
        let m = ProcessModel::new(
            MeanSpec::zero(),
            KernelSpec::ar1(0.3).unwrap(),
            Perturbation::Separable { c: 1.0, rho: 0.5 },
        )
        .unwrap();
        let k = m.covariance_matrix(5);
        for s in 0..5 {
            for r in 0..5 {
                assert_eq!(k.get(s, r), k.get(r, s));
            }
        }
        assert_abs_diff_eq!(k.get(1, 2), m.kernel.k(1) + 0.125, epsilon = 1e-15);
    }

    #[test]
    fn conditioning_at_the_mean() {
        let m = ProcessModel::stationary(KernelSpec::ar1(0.4).unwrap(), MeanSpec::Constant(2.0))
            .unwrap();
        let c = m.condition_on_start(2.0, 4).unwrap();
        assert_eq!(c.mean[0], 2.0);
        for s in 0..4 {
            assert_eq!(c.cov.get(0, s), 0.0);
            assert_eq!(c.cov.get(s, 0), 0.0);
            assert_abs_diff_eq!(c.mean[s], 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn conditioning_white_and_ar1() {
        let white = ProcessModel::stationary(KernelSpec::white(), MeanSpec::zero()).unwrap();
        let c = white.condition_on_start(3.0, 2).unwrap();
        assert_eq!(c.mean, vec![3.0, 0.0]);
        assert_eq!(c.cov.as_slice(), &[0.0, 0.0, 0.0, 1.0]);

        let ar = ProcessModel::stationary(KernelSpec::ar1(0.5).unwrap(), MeanSpec::zero()).unwrap();
        let c = ar.condition_on_start(1.0, 2).unwrap();
        assert_abs_diff_eq!(c.mean[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.cov.get(1, 1), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn conditioning_uses_the_mean_at_zero() {
        let m = ProcessModel::stationary(
            KernelSpec::ar1(0.5).unwrap(),
            MeanSpec::Decaying {
                m_inf: 1.0,
                c: 2.0,
                rho: 0.5,
            },
        )
        .unwrap();
        let c = m.condition_on_start(0.0, 3).unwrap();
        // E[X_2 | X_0 = 0] = m(2) + (K(0,2)/K(0,0)) (0 - m(0)) = 1.5 + 0.25 * (-3)
        assert_abs_diff_eq!(c.mean[2], 0.75, epsilon = 1e-14);
    }

    #[test]
    fn zero_start_variance_is_rejected() {
        let m = ProcessModel::stationary(KernelSpec::table(vec![0.0]).unwrap(), MeanSpec::zero())
            .unwrap();
        assert!(matches!(
            m.condition_on_start(1.0, 3),
            Err(Error::ZeroStartVariance(_))
        ));
    }

    #[test]
    fn hypothesis_report_examples() {
        let white = ProcessModel::stationary(KernelSpec::white(), MeanSpec::zero()).unwrap();
        let r = white.hypothesis_report(10);
        assert_eq!(r.max_row_abs_sum, 1.0);
        assert_eq!(r.kernel_abs_sum, 1.0);
        assert_eq!(r.covariance_gap, 0.0);

        let decaying = ProcessModel::stationary(
            KernelSpec::white(),
            MeanSpec::Decaying {
                m_inf: 1.0,
                c: 1.0,
                rho: 0.5,
            },
        )
        .unwrap();
        let r = decaying.hypothesis_report(100);
        let expected = (1.0 - 0.5f64.powi(100)) / (1.0 - 0.5) / 100.0;
        assert_abs_diff_eq!(r.mean_gap, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(r.sup_mean, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn covariance_gap_decreases_for_separable_perturbation() {
        let m = ProcessModel::new(
            MeanSpec::zero(),
            KernelSpec::ar1(0.5).unwrap(),
            Perturbation::Separable { c: 1.0, rho: 0.5 },
        )
        .unwrap();
        let gaps: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&t| m.hypothesis_report(t).covariance_gap)
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }
}
