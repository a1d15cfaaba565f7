//! The limit `-l(alpha) = lim (1/t) log L_t(alpha)` and the semi-infinite
//! Wiener-Hopf solution that drives it.
//!
//! `l = l0 + l1` with
//!
//! * `l0(alpha) = (1/4 pi) int_0^{2 pi} log(1 + 2 alpha f(lambda)) d lambda`,
//!   evaluated by the trapezoid rule on a uniform periodic grid;
//! * `l1(alpha) = m_inf^2 alpha / (1 + 2 alpha f(lambda*))`, where
//!   `lambda* = 0` for constant or decaying means and `pi` for alternating ones.
//!
//! For `2 alpha M < 1` the system `g(s) + 2 alpha sum_{r>=0} g(r) k(s-r) = delta_{s,0}`
//! has a summable solution with `g(0) = exp(-(1/2 pi) int log(1 + 2 alpha f))`
//! and `sum g = exp(-1/2 log(1 + 2 alpha f(0)) - l0)`. [`wiener_hopf`] solves
//! the truncated system and reports both closed forms beside it.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::factorization::{GtRecursion, GtRow};
use crate::kernels::{KernelSpec, MeanSpec, ProcessModel};
use crate::laplace::{log_laplace_conditioned_grid, log_laplace_grid};

pub const DEFAULT_NODES: usize = 4096;
pub const DEFAULT_TOL: f64 = 1e-8;
const INITIAL_TRUNCATION: usize = 256;
const MAX_TRUNCATION: usize = 1 << 15;

/// Trapezoid approximation of `(1/2 pi) int_0^{2 pi} log(1 + 2 alpha f)`.
fn mean_log_symbol(kernel: &KernelSpec, alpha: f64, nodes: usize) -> f64 {
    let h = 2.0 * PI / nodes as f64;
    let total: f64 = (0..nodes)
        .map(|j| (2.0 * alpha * kernel.spectral_density(h * j as f64)).ln_1p())
        .sum();
    total / nodes as f64
}

/// `l0(alpha)` by the trapezoid rule with `nodes` points.
pub fn ell0(kernel: &KernelSpec, alpha: f64, nodes: usize) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    0.5 * mean_log_symbol(kernel, alpha, nodes.max(1))
}

/// `l1(alpha) = m_inf^2 alpha / (1 + 2 alpha f(lambda*))`.
pub fn ell1(kernel: &KernelSpec, mean: &MeanSpec, alpha: f64) -> f64 {
    let m = mean.m_inf();
    m * m * alpha / (1.0 + 2.0 * alpha * kernel.spectral_density(mean.mean_frequency()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitResult {
    pub alpha: f64,
    pub ell0: f64,
    pub ell1: f64,
    pub ell: f64,
    pub nodes: usize,
    /// `|l0(nodes) - l0(2 nodes)|`.
    pub quadrature_delta: f64,
    pub mean_frequency: f64,
}

pub fn limit(kernel: &KernelSpec, mean: &MeanSpec, alpha: f64, nodes: usize) -> LimitResult {
    let l0 = ell0(kernel, alpha, nodes);
    let l1 = ell1(kernel, mean, alpha);
    LimitResult {
        alpha,
        ell0: l0,
        ell1: l1,
        ell: l0 + l1,
        nodes,
        quadrature_delta: (l0 - ell0(kernel, alpha, 2 * nodes)).abs(),
        mean_frequency: mean.mean_frequency(),
    }
}

/// Truncated solution of the semi-infinite Wiener-Hopf system.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerHopfSolution {
    pub alpha: f64,
    /// Index `T` of the finite section; `g` has `T + 1` entries.
    pub truncation: usize,
    pub g: Vec<f64>,
    /// `exp(-(1/2 pi) int log(1 + 2 alpha f))`.
    pub g0_closed: f64,
    /// `exp(-1/2 log(1 + 2 alpha f(0)) - (1/4 pi) int log(1 + 2 alpha f))`.
    pub sum_closed: f64,
    /// `M = sum |k|`.
    pub abs_sum: f64,
    /// Residual of the truncated system on `s = 0..=T`.
    pub residual: f64,
    /// `1 / (1 + 2 alpha f(0))`.
    pub ratio_closed: f64,
}

impl WienerHopfSolution {
    pub fn g0(&self) -> f64 {
        self.g[0]
    }

    pub fn sum(&self) -> f64 {
        self.g.iter().sum()
    }

    /// `(1/g(0)) (sum g)^2`, whose limit is `1 / (1 + 2 alpha f(0))`.
    pub fn ratio(&self) -> f64 {
        let s = self.sum();
        s * s / self.g0()
    }
}

/// Solves the finite sections at `T = 256, 512, ..` until `g_T(0)` and
/// `sum g_T` move by less than `tol` between consecutive doublings.
pub fn wiener_hopf(kernel: &KernelSpec, alpha: f64, tol: f64, nodes: usize) -> Result<WienerHopfSolution> {
    let abs_sum = kernel.abs_sum();
    let product = 2.0 * alpha * abs_sum;
    if !(alpha >= 0.0) || !(product < 1.0) {
        return Err(Error::AlphaOutOfRange {
            alpha,
            abs_sum,
            product,
        });
    }
    let mut rec = GtRecursion::new(kernel, alpha)?;
    let mut truncation = INITIAL_TRUNCATION;
    let mut previous = rec.row_at(truncation)?;
    let row: GtRow = loop {
        let next_truncation = 2 * truncation;
        if next_truncation > MAX_TRUNCATION {
            return Err(Error::NoConvergence {
                truncation: next_truncation,
            });
        }
        let next = rec.row_at(next_truncation)?;
        let converged = (next.pivot() - previous.pivot()).abs() < tol
            && (next.sum() - previous.sum()).abs() < tol;
        truncation = next_truncation;
        if converged {
            break next;
        }
        previous = next;
    };

    let log_mean = mean_log_symbol(kernel, alpha, nodes);
    let f0 = kernel.spectral_density(0.0);
    Ok(WienerHopfSolution {
        alpha,
        truncation,
        residual: row.residual(kernel, alpha),
        g: row.values,
        g0_closed: (-log_mean).exp(),
        sum_closed: (-0.5 * (2.0 * alpha * f0).ln_1p() - 0.5 * log_mean).exp(),
        abs_sum,
        ratio_closed: 1.0 / (1.0 + 2.0 * alpha * f0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub t: usize,
    pub scaled_log_laplace: f64,
    pub neg_ell: f64,
    pub abs_error: f64,
}

fn check_grid(ts: &[usize]) -> Result<()> {
    if ts.is_empty() || ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("t grid must be nonempty and strictly ascending".into()));
    }
    Ok(())
}

/// `(1/t) log L_t(alpha)` against `-l(alpha)` over an ascending horizon grid.
pub fn convergence_table(
    model: &ProcessModel,
    alpha: f64,
    ts: &[usize],
    nodes: usize,
) -> Result<Vec<ConvergenceRow>> {
    check_grid(ts)?;
    let neg_ell = -limit(&model.kernel, &model.mean, alpha, nodes).ell;
    Ok(log_laplace_grid(model, alpha, ts)?
        .into_iter()
        .map(|ll| rows_from(ll.t, ll.scaled(), neg_ell))
        .collect())
}

/// As [`convergence_table`], for the law conditioned on `X_0 = x`.
pub fn convergence_table_conditioned(
    model: &ProcessModel,
    x: f64,
    alpha: f64,
    ts: &[usize],
    nodes: usize,
) -> Result<Vec<ConvergenceRow>> {
    check_grid(ts)?;
    let neg_ell = -limit(&model.kernel, &model.mean, alpha, nodes).ell;
    Ok(log_laplace_conditioned_grid(model, x, alpha, ts)?
        .into_iter()
        .map(|ll| rows_from(ll.t, ll.scaled(), neg_ell))
        .collect())
}

fn rows_from(t: usize, scaled: f64, neg_ell: f64) -> ConvergenceRow {
    ConvergenceRow {
        t,
        scaled_log_laplace: scaled,
        neg_ell,
        abs_error: (scaled - neg_ell).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ar1oracle::{ar1_ell0, ar1_ell1};
    use crate::factorization::pivot_sequence;
    use approx::assert_abs_diff_eq;

    #[test]
    fn white_values() {
        let w = KernelSpec::white();
        assert_abs_diff_eq!(ell0(&w, 0.5, DEFAULT_NODES), 0.5 * 2f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ell0(&w, 0.5, DEFAULT_NODES), 0.34657, epsilon = 5e-6);
        let mu = 0.7;
        let r = limit(&w, &MeanSpec::Constant(mu), 1.3, DEFAULT_NODES);
        let expected = 0.5 * 3.6f64.ln() + 1.3 * mu * mu / 3.6;
        assert_abs_diff_eq!(r.ell, expected, epsilon = 1e-13);
    }

    #[test]
    fn alpha_zero_gives_zero() {
        let k = KernelSpec::ar1(0.9).unwrap();
        let r = limit(&k, &MeanSpec::Constant(2.0), 0.0, DEFAULT_NODES);
        assert_eq!((r.ell0, r.ell1, r.ell), (0.0, 0.0, 0.0));
    }

    #[test]
    fn ar1_values() {
        let k = KernelSpec::ar1(0.5).unwrap();
        assert_abs_diff_eq!(ell0(&k, 0.5, DEFAULT_NODES), 0.378_713_666_6, epsilon = 1e-10);
        assert_abs_diff_eq!(ell1(&k, &MeanSpec::Constant(1.0), 0.5), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(
            ell1(&k, &MeanSpec::Alternating(1.0), 0.5),
            0.5 / (1.0 + 1.0 / 2.25),
            epsilon = 1e-15
        );
        let r = limit(&k, &MeanSpec::Constant(1.0), 0.5, DEFAULT_NODES);
        assert_abs_diff_eq!(r.ell, 0.478_713_666_6, epsilon = 1e-10);
        assert_eq!(ell1(&k, &MeanSpec::zero(), 3.0), 0.0);
    }

    #[test]
    fn quadrature_matches_closed_form_and_is_converged() {
        for &theta in &[-0.5, 0.5, 0.9] {
            let k = KernelSpec::ar1(theta).unwrap();
            for &alpha in &[0.1, 0.5, 2.0] {
                let r = limit(&k, &MeanSpec::Constant(1.0), alpha, DEFAULT_NODES);
                assert!((r.ell0 - ar1_ell0(theta, alpha).unwrap()).abs() <= 1e-8);
                assert!((r.ell1 - ar1_ell1(theta, 1.0, alpha).unwrap()).abs() <= 1e-14);
                assert!(r.quadrature_delta < 1e-10);
            }
        }
    }

    #[test]
    fn limit_invariants() {
        let k = KernelSpec::ma(vec![1.0, -0.6, 0.2]).unwrap();
        let max_f = (0..4096)
            .map(|j| k.spectral_density(2.0 * PI * j as f64 / 4096.0))
            .fold(0.0, f64::max);
        let alphas: Vec<f64> = (0..30).map(|i| 0.1 * i as f64).collect();
        let negs: Vec<f64> = alphas
            .iter()
            .map(|&a| {
                let r = limit(&k, &MeanSpec::Constant(0.5), a, DEFAULT_NODES);
                assert!(r.ell0 >= 0.0 && r.ell1 >= 0.0);
                assert!(r.ell0 <= 0.5 * (1.0 + 2.0 * a * max_f).ln() + 1e-15);
                -r.ell
            })
            .collect();
        assert!(negs.windows(2).all(|w| w[1] <= w[0]));
        assert!(negs.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-9));
    }

    #[test]
    fn wiener_hopf_white() {
        let s = wiener_hopf(&KernelSpec::white(), 0.4, DEFAULT_TOL, DEFAULT_NODES).unwrap();
        assert_abs_diff_eq!(s.g0(), 1.0 / 1.8, epsilon = 1e-15);
        assert!(s.g[1..].iter().all(|&v| v == 0.0));
        assert_abs_diff_eq!(s.g0_closed, 1.0 / 1.8, epsilon = 1e-12);
        assert_abs_diff_eq!(s.sum_closed, 1.0 / 1.8, epsilon = 1e-12);
    }

    #[test]
    fn wiener_hopf_alpha_zero() {
        let s = wiener_hopf(&KernelSpec::ar1(0.3).unwrap(), 0.0, DEFAULT_TOL, DEFAULT_NODES).unwrap();
        assert_eq!(s.g0(), 1.0);
        assert_eq!(s.sum(), 1.0);
        assert_eq!(s.g0_closed, 1.0);
        assert_eq!(s.sum_closed, 1.0);
    }

    #[test]
    fn wiener_hopf_ar1_matches_closed_forms() {
        let s = wiener_hopf(&KernelSpec::ar1(0.5).unwrap(), 0.1, DEFAULT_TOL, DEFAULT_NODES).unwrap();
        assert!((s.g0() - s.g0_closed).abs() <= 1e-6);
        assert!((s.sum() - s.sum_closed).abs() <= 1e-6);
        assert!((s.ratio() - s.ratio_closed).abs() <= 1e-6);
        assert!(s.residual < 1e-9);
    }

    #[test]
    fn wiener_hopf_rejects_large_alpha() {
        let err = wiener_hopf(&KernelSpec::ar1(0.5).unwrap(), 0.125, DEFAULT_TOL, DEFAULT_NODES)
            .unwrap_err();
        assert!(matches!(err, Error::AlphaOutOfRange { .. }));
        assert!(err.to_string().starts_with("AlphaOutOfRange"));
    }

    #[test]
    fn pivot_product_is_log_det() {
        let k = KernelSpec::ar1(0.5).unwrap();
        let model = ProcessModel::stationary(k.clone(), MeanSpec::zero()).unwrap();
        let t = 64;
        let pivots = pivot_sequence(&k, 0.5, t).unwrap();
        let lhs: f64 = pivots.iter().map(|g| g.ln()).sum::<f64>() / (2.0 * t as f64);
        let det_part = crate::laplace::log_laplace(&model, 0.5, t).unwrap().det_part;
        assert!((lhs - det_part / t as f64).abs() < 1e-12);
    }

    #[test]
    fn white_table_has_zero_error() {
        let model = ProcessModel::stationary(KernelSpec::white(), MeanSpec::zero()).unwrap();
        for row in convergence_table(&model, 0.7, &[1, 10, 100], DEFAULT_NODES).unwrap() {
            assert!(row.abs_error < 1e-14);
        }
    }

    #[test]
    fn grid_must_ascend() {
        let model = ProcessModel::stationary(KernelSpec::white(), MeanSpec::zero()).unwrap();
        assert!(convergence_table(&model, 0.7, &[10, 5], DEFAULT_NODES).is_err());
    }
}
