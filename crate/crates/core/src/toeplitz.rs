//! Toeplitz matrices, the strong and weak matrix norms, and asymptotic
//! equivalence diagnostics.
//!
//! For a square matrix `A` of size `t`, the strong norm is the maximum
//! absolute row sum and the weak norm is `(1/t) sum_{s,r} |A(s,r)|`. Two
//! sequences of matrices are asymptotically equivalent when both are bounded
//! in the strong norm and the weak norm of their difference vanishes; the
//! functions here compute the finite-`t` quantities whose behaviour in `t`
//! the caller tracks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::factorization::factorize;
use crate::kernels::KernelSpec;
pub use crate::matrix::{SquareMatrix, SymMatrix};

/// `H_t(s, r) = k(s - r)`.
pub fn toeplitz(kernel: &KernelSpec, t: usize) -> SymMatrix {
    kernel.toeplitz(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub strong: f64,
    pub weak: f64,
}

/// Maximum absolute row sum.
pub fn strong_norm<M: SquareMatrix + ?Sized>(a: &M) -> f64 {
    let n = a.size();
    (0..n)
        .map(|s| (0..n).map(|r| a.entry(s, r).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `(1/t) sum_{s,r} |A(s, r)|`; zero for the empty matrix.
pub fn weak_norm<M: SquareMatrix + ?Sized>(a: &M) -> f64 {
    let n = a.size();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = (0..n)
        .flat_map(|s| (0..n).map(move |r| (s, r)))
        .map(|(s, r)| a.entry(s, r).abs())
        .sum();
    total / n as f64
}

pub fn norms<M: SquareMatrix + ?Sized>(a: &M) -> NormReport {
    NormReport {
        strong: strong_norm(a),
        weak: weak_norm(a),
    }
}

/// `|A_t - B_t|`.
pub fn equivalence_gap(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    Ok(weak_norm(&a.sub(b)?))
}

/// `(1/t) ||v - w||_1`.
pub fn vector_equivalence_gap(v: &[f64], w: &[f64]) -> Result<f64> {
    if v.len() != w.len() {
        return Err(Error::SizeMismatch {
            left: v.len(),
            right: w.len(),
        });
    }
    if v.is_empty() {
        return Ok(0.0);
    }
    let l1: f64 = v.iter().zip(w).map(|(a, b)| (a - b).abs()).sum();
    Ok(l1 / v.len() as f64)
}

/// `d_t^(lambda) = (e^{-i lambda s})_{s < t}`.
pub fn frequency_vector(lambda: f64, t: usize) -> Vec<Complex64> {
    (0..t)
        .map(|s| Complex64::from_polar(1.0, -lambda * s as f64))
        .collect()
}

/// Solves `(I + 2 alpha H_t) u = v` with `t = v.len()`.
pub fn resolvent_apply(kernel: &KernelSpec, alpha: f64, v: &[Complex64]) -> Result<Vec<Complex64>> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let t = v.len();
    let a = kernel.toeplitz(t).shifted_identity(2.0 * alpha);
    let f = factorize(&a).map_err(|e| Error::FactorizationFailure(e.to_string()))?;
    if f.degenerate_count() > 0 {
        return Err(Error::FactorizationFailure(
            "I + 2 alpha H_t is singular".into(),
        ));
    }
    let re: Vec<f64> = v.iter().map(|z| z.re).collect();
    let im: Vec<f64> = v.iter().map(|z| z.im).collect();
    let ur = f.solve(&re)?;
    let ui = f.solve(&im)?;
    Ok(ur
        .into_iter()
        .zip(ui)
        .map(|(r, i)| Complex64::new(r, i))
        .collect())
}

/// `(1/t) || (I + 2 alpha H_t)^{-1} d - (1 + 2 alpha f(lambda))^{-1} d ||_1`
/// with `d = d_t^(lambda)`, moduli taken entrywise.
pub fn eigen_approx_gap(kernel: &KernelSpec, alpha: f64, lambda: f64, t: usize) -> Result<f64> {
    if t == 0 {
        return Ok(0.0);
    }
    let d = frequency_vector(lambda, t);
    let u = resolvent_apply(kernel, alpha, &d)?;
    let scale = 1.0 / (1.0 + 2.0 * alpha * kernel.spectral_density(lambda));
    let l1: f64 = u.iter().zip(&d).map(|(a, b)| (a - b * scale).norm()).sum();
    Ok(l1 / t as f64)
}
