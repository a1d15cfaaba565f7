//! Exact finite-horizon Laplace transforms of `sum_{s<t} X_s^2`, in log domain.
//!
//! For a Gaussian vector with mean `m` and covariance `K`,
//! `log E[exp(-alpha |X|^2)] = -1/2 log det(I + 2 alpha K) - alpha m* (I + 2 alpha K)^{-1} m`.
//! Both terms are accumulated row by row from the factorization of
//! `I + 2 alpha K`, which is prefix-consistent: the first `t` rows of the
//! factorization at size `T >= t` are the factorization at size `t`. One
//! factorization therefore yields the transform for every horizon up to `T`.

use crate::error::{Error, Result};
use crate::factorization::{factorize, GtRecursion};
use crate::kernels::{KernelSpec, ProcessModel};
use crate::matrix::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLaplace {
    pub t: usize,
    pub alpha: f64,
    /// `log L_t(alpha)`.
    pub log_value: f64,
    /// `-1/2 log det(I + 2 alpha K_t)`.
    pub det_part: f64,
    /// `-alpha m* (I + 2 alpha K_t)^{-1} m`.
    pub mean_part: f64,
}

impl LogLaplace {
    pub fn scaled(&self) -> f64 {
        self.log_value / self.t as f64
    }
}

enum Covariance<'a> {
    Toeplitz(&'a KernelSpec),
    Dense(&'a SymMatrix),
}

/// Cumulative `(log det, quadratic form)` of `I + 2 alpha K` over the leading
/// blocks of size `1..=mean.len()`.
fn prefix_sums(mean: &[f64], cov: Covariance<'_>, alpha: f64) -> Result<Vec<(f64, f64)>> {
    let n = mean.len();
    let mut out = Vec::with_capacity(n);
    let (mut log_det, mut quad) = (0.0, 0.0);
    match cov {
        Covariance::Toeplitz(kernel) => {
            let mut rec = GtRecursion::new(kernel, alpha)?;
            for tau in 0..n {
                let row = rec.advance()?;
                let pivot = row[0];
                let filtered: f64 = row
                    .iter()
                    .zip(mean[..=tau].iter().rev())
                    .map(|(g, m)| g * m)
                    .sum();
                log_det -= pivot.ln();
                quad += filtered * filtered / pivot;
                out.push((log_det, quad));
            }
        }
        Covariance::Dense(k) => {
            if k.size() != n {
                return Err(Error::SizeMismatch {
                    left: n,
                    right: k.size(),
                });
            }
            let f = factorize(&k.shifted_identity(2.0 * alpha))?;
            let y = f.innovations(mean)?;
            for (tau, y_tau) in y.iter().enumerate() {
                if !f.is_degenerate(tau) {
                    let d = f.innovation_variance(tau);
                    log_det += d.ln();
                    quad += y_tau * y_tau / d;
                }
                out.push((log_det, quad));
            }
        }
    }
    Ok(out)
}

fn check_inputs(alpha: f64, ts: &[usize]) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    if ts.contains(&0) {
        return Err(Error::Domain("horizon t must be >= 1".into()));
    }
    Ok(())
}

fn assemble(sums: &[(f64, f64)], alpha: f64, ts: &[usize]) -> Vec<LogLaplace> {
    ts.iter()
        .map(|&t| {
            let (log_det, quad) = sums[t - 1];
            let det_part = -0.5 * log_det;
            let mean_part = -alpha * quad;
            LogLaplace {
                t,
                alpha,
                log_value: det_part + mean_part,
                det_part,
                mean_part,
            }
        })
        .collect()
}

/// `log L_t(alpha)` for a Gaussian vector with the given mean and covariance.
pub fn log_laplace_vector(mean: &[f64], cov: &SymMatrix, alpha: f64) -> Result<LogLaplace> {
    let t = mean.len();
    check_inputs(alpha, &[t])?;
    let sums = prefix_sums(mean, Covariance::Dense(cov), alpha)?;
    Ok(assemble(&sums, alpha, &[t])[0])
}

/// `log L_t(alpha)` for every `t` in `ts`, from a single factorization.
pub fn log_laplace_grid(model: &ProcessModel, alpha: f64, ts: &[usize]) -> Result<Vec<LogLaplace>> {
    check_inputs(alpha, ts)?;
    let t_max = ts.iter().copied().max().unwrap_or(0);
    let mean = model.mean_vector(t_max);
    let sums = if model.is_toeplitz() {
        prefix_sums(&mean, Covariance::Toeplitz(&model.kernel), alpha)?
    } else {
        let cov = model.covariance_matrix(t_max);
        prefix_sums(&mean, Covariance::Dense(&cov), alpha)?
    };
    Ok(assemble(&sums, alpha, ts))
}

pub fn log_laplace(model: &ProcessModel, alpha: f64, t: usize) -> Result<LogLaplace> {
    Ok(log_laplace_grid(model, alpha, &[t])?[0])
}

/// `log E[exp(-alpha sum_{s<t} X_s^2) | X_0 = x]` for every `t` in `ts`.
///
/// The conditioned covariance has a zero first row, so `I + 2 alpha K` keeps
/// a unit first row and the start contributes exactly `-alpha x^2` through the
/// mean term.
pub fn log_laplace_conditioned_grid(
    model: &ProcessModel,
    x: f64,
    alpha: f64,
    ts: &[usize],
) -> Result<Vec<LogLaplace>> {
    check_inputs(alpha, ts)?;
    let t_max = ts.iter().copied().max().unwrap_or(0);
    let start = model.condition_on_start(x, t_max)?;
    let sums = prefix_sums(&start.mean, Covariance::Dense(&start.cov), alpha)?;
    Ok(assemble(&sums, alpha, ts))
}

pub fn log_laplace_conditioned(
    model: &ProcessModel,
    x: f64,
    alpha: f64,
    t: usize,
) -> Result<LogLaplace> {
    Ok(log_laplace_conditioned_grid(model, x, alpha, &[t])?[0])
}

/// `(1/t) log L_t(alpha)`.
pub fn scaled_log_laplace(model: &ProcessModel, alpha: f64, t: usize) -> Result<f64> {
    Ok(log_laplace(model, alpha, t)?.scaled())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{MeanSpec, Perturbation};
    use approx::assert_abs_diff_eq;

    fn ar1(theta: f64, mean: MeanSpec) -> ProcessModel {
        ProcessModel::stationary(KernelSpec::ar1(theta).unwrap(), mean).unwrap()
    }

    #[test]
    fn alpha_zero_is_zero() {
        let m = ar1(0.5, MeanSpec::Constant(3.0));
        assert_eq!(log_laplace(&m, 0.0, 17).unwrap().log_value, 0.0);
    }

    #[test]
    fn single_chi_square() {
        let mu = 1.7;
        let m = ProcessModel::stationary(KernelSpec::white(), MeanSpec::Constant(mu)).unwrap();
        for &alpha in &[0.1f64, 0.5, 3.0] {
            let expected = -0.5 * (1.0 + 2.0 * alpha).ln() - alpha * mu * mu / (1.0 + 2.0 * alpha);
            assert_abs_diff_eq!(log_laplace(&m, alpha, 1).unwrap().log_value, expected, epsilon = 1e-15);
            for &t in &[1usize, 5, 40] {
                assert_abs_diff_eq!(scaled_log_laplace(&m, alpha, t).unwrap(), expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn ar1_two_by_two_dense_oracle() {
        let alpha: f64 = 0.5;
        let (a, b) = (1.0 + 2.0 * alpha * 4.0 / 3.0, 2.0 * alpha * 2.0 / 3.0);
        let det = a * a - b * b;
        // m* A^{-1} m with m = (1, 1): (2a - 2b) / det
        let quad = (2.0 * a - 2.0 * b) / det;
        let expected = -0.5 * det.ln() - alpha * quad;
        let got = log_laplace(&ar1(0.5, MeanSpec::Constant(1.0)), alpha, 2).unwrap();
        assert_abs_diff_eq!(got.log_value, expected, epsilon = 1e-14);
    }

    #[test]
    fn toeplitz_path_matches_dense_path() {
        let m = ar1(-0.6, MeanSpec::Alternating(1.3));
        for &alpha in &[0.05, 0.5, 4.0] {
            let fast = log_laplace(&m, alpha, 60).unwrap();
            let dense =
                log_laplace_vector(&m.mean_vector(60), &m.covariance_matrix(60), alpha).unwrap();
            assert_abs_diff_eq!(fast.det_part, dense.det_part, epsilon = 1e-10);
            assert_abs_diff_eq!(fast.mean_part, dense.mean_part, epsilon = 1e-10);
        }
    }

    #[test]
    fn conditioned_examples() {
        let white = ProcessModel::stationary(KernelSpec::white(), MeanSpec::zero()).unwrap();
        let alpha = 0.8;
        let x = 1.5;
        assert_abs_diff_eq!(
            log_laplace_conditioned(&white, x, alpha, 1).unwrap().log_value,
            -alpha * x * x,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            log_laplace_conditioned(&white, 0.0, alpha, 2).unwrap().log_value,
            -0.5 * (1.0 + 2.0 * alpha).ln(),
            epsilon = 1e-15
        );

        // ar1(0.5), x = 1: X_1 | X_0 = 1 ~ N(0.5, 1)
        let m = ar1(0.5, MeanSpec::zero());
        let alpha: f64 = 0.5;
        let expected = -alpha * 1.0 - 0.5 * (1.0 + 2.0 * alpha).ln()
            - alpha * 0.25 / (1.0 + 2.0 * alpha);
        assert_abs_diff_eq!(
            log_laplace_conditioned(&m, 1.0, alpha, 2).unwrap().log_value,
            expected,
            epsilon = 1e-14
        );
    }

    #[test]
    fn grid_matches_single_evaluations() {
        let m = ProcessModel::new(
            MeanSpec::Decaying { m_inf: 1.0, c: -0.5, rho: 0.7 },
            KernelSpec::ma(vec![1.0, 0.4]).unwrap(),
            Perturbation::Separable { c: 0.5, rho: 0.6 },
        )
        .unwrap();
        let ts = [3usize, 9, 20];
        let grid = log_laplace_grid(&m, 0.3, &ts).unwrap();
        for (row, &t) in grid.iter().zip(&ts) {
            let single = log_laplace(&m, 0.3, t).unwrap();
            assert_abs_diff_eq!(row.log_value, single.log_value, epsilon = 1e-12);
        }
    }

    #[test]
    fn monotone_and_convex_in_alpha() {
        let m = ar1(0.7, MeanSpec::Constant(0.8));
        let alphas: Vec<f64> = (0..40).map(|i| i as f64 * 0.05).collect();
        let values: Vec<f64> = alphas
            .iter()
            .map(|&a| log_laplace(&m, a, 30).unwrap().log_value)
            .collect();
        assert!(values.iter().all(|&v| v <= 0.0));
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
        for w in values.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
        }
    }

    #[test]
    fn mean_part_is_quadratic_in_the_mean() {
        let a = log_laplace(&ar1(0.4, MeanSpec::Constant(1.0)), 0.6, 25).unwrap();
        let b = log_laplace(&ar1(0.4, MeanSpec::Constant(3.0)), 0.6, 25).unwrap();
        assert_eq!(a.det_part, b.det_part);
        assert_abs_diff_eq!(b.mean_part, 9.0 * a.mean_part, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = ar1(0.4, MeanSpec::zero());
        assert!(log_laplace(&m, -1.0, 3).is_err());
        assert!(log_laplace(&m, 1.0, 0).is_err());
    }
}
