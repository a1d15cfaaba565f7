//! Triangular factorization `A^{-1} = G* D^{-1} G` of a positive semidefinite matrix.
//!
//! `G` is lower triangular with row `tau` solving
//! `sum_{r <= tau} G(tau, r) A(r, s) = delta_{tau, s}` for `s <= tau`, and
//! `D = diag(G(tau, tau))`. Row `tau` of `G`, divided by its pivot, is the
//! partial innovation filter: `nu_tau = (1/G(tau,tau)) sum_r G(tau, r) Y_r`
//! has variance `1/G(tau,tau)`.
//!
//! Two paths are provided. [`factorize`] works on any dense symmetric matrix
//! through an `LDL*` decomposition of `A`, from which `G = D_A^{-1} L^{-1}`.
//! [`GtRecursion`] exploits the Toeplitz structure of `I + 2 alpha H_t` and
//! produces the reversed rows `g_tau(s) = G(tau, tau - s)` in `O(tau)` each.

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::matrix::SymMatrix;

/// Pivots of `A`'s `LDL*` below this multiple of the largest diagonal entry
/// mark a degenerate (deterministic) coordinate.
pub const DEGENERATE_PIVOT: f64 = 1e-12;

/// Pivots below `-NEGATIVE_PIVOT * max diag` reject the matrix.
pub const NEGATIVE_PIVOT: f64 = 1e-9;

/// `LDL*` factors of a symmetric positive semidefinite matrix, exposing the
/// coefficients `G(tau, s)`.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    /// Unit lower triangular `L`, row-major `n x n`.
    lower: Vec<f64>,
    /// Pivots `d_tau` of `A = L D_A L*`; zero on degenerate rows.
    diag: Vec<f64>,
    degenerate: Vec<bool>,
}

/// Factorizes `a` as `L D_A L*`.
///
/// Degenerate coordinates keep a Kronecker row in `G`, a unit pivot, and do
/// not contribute to determinants or quadratic forms.
pub fn factorize(a: &SymMatrix) -> Result<Factorization> {
    let n = a.size();
    let max_diag = a.max_diag();
    let floor = DEGENERATE_PIVOT * max_diag;
    let reject = -NEGATIVE_PIVOT * max_diag;

    let mut lower = vec![0.0; n * n];
    let mut diag = vec![0.0; n];
    let mut degenerate = vec![false; n];
    let mut scaled = vec![0.0; n];

    for j in 0..n {
        let row_j = &lower[j * n..j * n + j];
        for k in 0..j {
            scaled[k] = row_j[k] * diag[k];
        }
        let dj = a.get(j, j) - row_j.iter().zip(&scaled[..j]).map(|(l, w)| l * w).sum::<f64>();
        if !dj.is_finite() || dj < reject {
            return Err(Error::NotPositiveSemidefinite {
                index: j,
                pivot: dj,
            });
        }
        lower[j * n + j] = 1.0;
        if dj <= floor {
            degenerate[j] = true;
            diag[j] = 0.0;
            continue;
        }
        diag[j] = dj;
        for i in j + 1..n {
            let row_i = &lower[i * n..i * n + j];
            let dot: f64 = row_i.iter().zip(&scaled[..j]).map(|(l, w)| l * w).sum();
            lower[i * n + j] = (a.get(i, j) - dot) / dj;
        }
    }

    Ok(Factorization {
        n,
        lower,
        diag,
        degenerate,
    })
}

impl Factorization {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn is_degenerate(&self, tau: usize) -> bool {
        self.degenerate[tau]
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }

    /// `L(i, j)` of `A = L D_A L*`.
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.n + j]
    }

    /// Pivot `d_tau` of `A`'s `LDL*`, i.e. the innovation variance `1/G(tau,tau)`.
    /// Zero on degenerate rows.
    pub fn innovation_variance(&self, tau: usize) -> f64 {
        self.diag[tau]
    }

    /// `G(tau, tau)`; 1 on degenerate rows.
    pub fn pivot(&self, tau: usize) -> f64 {
        if self.degenerate[tau] {
            1.0
        } else {
            1.0 / self.diag[tau]
        }
    }

    pub fn pivots(&self) -> Vec<f64> {
        (0..self.n).map(|tau| self.pivot(tau)).collect()
    }

    /// Row `tau` of `G`: `G(tau, 0..=tau)`.
    pub fn g_row(&self, tau: usize) -> Vec<f64> {
        let mut x = vec![0.0; tau + 1];
        if self.degenerate[tau] {
            x[tau] = 1.0;
            return x;
        }
        // Row tau of L^{-1}: solve L* x = e_tau on 0..=tau.
        x[tau] = 1.0;
        for r in (0..tau).rev() {
            let mut acc = 0.0;
            for i in r + 1..=tau {
                acc += self.lower[i * self.n + r] * x[i];
            }
            x[r] = -acc;
        }
        let scale = 1.0 / self.diag[tau];
        x.iter_mut().for_each(|v| *v *= scale);
        x
    }

    /// All rows of `G`. Cubic in the size; intended for small matrices.
    pub fn g_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|tau| self.g_row(tau)).collect()
    }

    /// `L^{-1} m`: coordinate `tau` equals `d_tau sum_r G(tau, r) m(r)` on
    /// non-degenerate rows.
    pub fn innovations(&self, m: &[f64]) -> Result<Vec<f64>> {
        self.check_len(m.len())?;
        let n = self.n;
        let mut y = m.to_vec();
        for i in 0..n {
            let dot: f64 = self.lower[i * n..i * n + i]
                .iter()
                .zip(&y[..i])
                .map(|(l, v)| l * v)
                .sum();
            y[i] -= dot;
        }
        Ok(y)
    }

    /// Solves `A u = b`, dropping the components along degenerate pivots.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let mut y = self.innovations(b)?;
        for (tau, v) in y.iter_mut().enumerate() {
            *v = if self.degenerate[tau] {
                0.0
            } else {
                *v / self.diag[tau]
            };
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in i + 1..n {
                acc -= self.lower[k * n + i] * y[k];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// `C` with `C C* = A`: `L diag(sqrt(d))`, row-major.
    pub fn square_root(&self) -> Vec<f64> {
        let n = self.n;
        let roots: Vec<f64> = self.diag.iter().map(|d| d.sqrt()).collect();
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                c[i * n + j] = self.lower[i * n + j] * roots[j];
            }
        }
        c
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            Err(Error::SizeMismatch {
                left: len,
                right: self.n,
            })
        } else {
            Ok(())
        }
    }
}

/// `log det(A) = -sum_tau log G(tau, tau)` over non-degenerate rows.
pub fn log_det_via_pivots(f: &Factorization) -> f64 {
    (0..f.n)
        .filter(|&tau| !f.degenerate[tau])
        .map(|tau| f.diag[tau].ln())
        .sum()
}

/// `m* A^{-1} m = sum_s (1/G(s,s)) (sum_r G(s,r) m(r))^2`; degenerate rows contribute 0.
pub fn quad_form_via_pivots(f: &Factorization, m: &[f64]) -> Result<f64> {
    let y = f.innovations(m)?;
    Ok((0..f.n)
        .filter(|&tau| !f.degenerate[tau])
        .map(|tau| y[tau] * y[tau] / f.diag[tau])
        .sum())
}

/// Reversed row `g_t(s) = G(t, t - s)`, `s = 0..=t`, of the factorization of
/// `I + 2 alpha H`.
#[derive(Debug, Clone, PartialEq)]
pub struct GtRow {
    pub t: usize,
    pub values: Vec<f64>,
}

impl GtRow {
    /// `g_t(0) = G(t, t)`.
    pub fn pivot(&self) -> f64 {
        self.values[0]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Max over `s <= t` of `|g_t(s) + 2 alpha sum_r g_t(r) k(s - r) - delta_{s,0}|`.
    pub fn residual(&self, kernel: &KernelSpec, alpha: f64) -> f64 {
        let n = self.values.len();
        let lags: Vec<f64> = (0..n).map(|h| kernel.k(h as i64)).collect();
        (0..n)
            .map(|s| {
                let conv: f64 = self
                    .values
                    .iter()
                    .enumerate()
                    .map(|(r, g)| g * lags[s.abs_diff(r)])
                    .sum();
                let delta = if s == 0 { 1.0 } else { 0.0 };
                (self.values[s] + 2.0 * alpha * conv - delta).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Levinson-Durbin recursion on the symbol `a(j) = delta_j + 2 alpha k(j)`.
///
/// Each call to [`GtRecursion::advance`] yields the next row `g_tau`, the first
/// column of `(I_{tau+1} + 2 alpha H_{tau+1})^{-1}`. With `phi` the order-`tau`
/// prediction coefficients and `E` the prediction error,
/// `g_tau = (1, -phi_1, .., -phi_tau) / E`.
#[derive(Debug, Clone)]
pub struct GtRecursion<'a> {
    kernel: &'a KernelSpec,
    alpha: f64,
    symbol: Vec<f64>,
    phi: Vec<f64>,
    scratch: Vec<f64>,
    error: f64,
    row: Vec<f64>,
    next: usize,
}

impl<'a> GtRecursion<'a> {
    pub fn new(kernel: &'a KernelSpec, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(GtRecursion {
            kernel,
            alpha,
            symbol: Vec::new(),
            phi: Vec::new(),
            scratch: Vec::new(),
            error: 0.0,
            row: Vec::new(),
            next: 0,
        })
    }

    fn symbol(&mut self, j: usize) -> f64 {
        while self.symbol.len() <= j {
            let h = self.symbol.len();
            let delta = if h == 0 { 1.0 } else { 0.0 };
            self.symbol
                .push(delta + 2.0 * self.alpha * self.kernel.k(h as i64));
        }
        self.symbol[j]
    }

    /// Index of the next row to be produced.
    pub fn next_index(&self) -> usize {
        self.next
    }

    /// Produces `g_tau` for `tau = next_index()`.
    pub fn advance(&mut self) -> Result<&[f64]> {
        let tau = self.next;
        if tau == 0 {
            self.error = self.symbol(0);
        } else {
            let mut num = self.symbol(tau);
            for j in 1..tau {
                num -= self.phi[j - 1] * self.symbol(tau - j);
            }
            let kappa = num / self.error;
            self.scratch.clear();
            self.scratch
                .extend((1..tau).map(|j| self.phi[j - 1] - kappa * self.phi[tau - j - 1]));
            self.scratch.push(kappa);
            std::mem::swap(&mut self.phi, &mut self.scratch);
            self.error *= 1.0 - kappa * kappa;
        }
        if !(self.error > 0.0) || !self.error.is_finite() {
            return Err(Error::FactorizationFailure(format!(
                "prediction error {} at order {tau}",
                self.error
            )));
        }
        let inv = 1.0 / self.error;
        self.row.clear();
        self.row.push(inv);
        self.row.extend(self.phi.iter().map(|p| -p * inv));
        self.next += 1;
        Ok(&self.row)
    }

    /// Advances through row `tau` and returns it.
    pub fn row_at(&mut self, tau: usize) -> Result<GtRow> {
        if tau + 1 < self.next {
            return Err(Error::Domain(format!(
                "row {tau} already passed (next is {})",
                self.next
            )));
        }
        while self.next <= tau {
            self.advance()?;
        }
        Ok(GtRow {
            t: tau,
            values: self.row.clone(),
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must be finite and >= 0, got {alpha}")))
    }
}

/// Rows `g_tau` for `tau = 0..t`, via the Toeplitz recursion.
pub fn g_rows(kernel: &KernelSpec, alpha: f64, t: usize) -> Result<Vec<GtRow>> {
    let mut rec = GtRecursion::new(kernel, alpha)?;
    let mut rows = Vec::with_capacity(t);
    for tau in 0..t {
        let values = rec.advance()?.to_vec();
        rows.push(GtRow { t: tau, values });
    }
    Ok(rows)
}

/// Rows `g_tau` for `tau = 0..t`, read off the dense factorization of `I + 2 alpha H_t`.
pub fn g_rows_reference(kernel: &KernelSpec, alpha: f64, t: usize) -> Result<Vec<GtRow>> {
    check_alpha(alpha)?;
    let a = kernel.toeplitz(t).shifted_identity(2.0 * alpha);
    let f = factorize(&a)?;
    Ok((0..t)
        .map(|tau| {
            let mut values = f.g_row(tau);
            values.reverse();
            GtRow { t: tau, values }
        })
        .collect())
}

/// Pivots `g_tau(0)` for `tau = 0..t`.
pub fn pivot_sequence(kernel: &KernelSpec, alpha: f64, t: usize) -> Result<Vec<f64>> {
    let mut rec = GtRecursion::new(kernel, alpha)?;
    (0..t).map(|_| rec.advance().map(|row| row[0])).collect()
}

/// Filtering statistics of row `t - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteringStats {
    /// `g_{t-1}(0)`: variance of the filter `mu`.
    pub pivot: f64,
    /// `E[(eps - mu)^2] = 1 - g_{t-1}(0)`.
    pub filter_error: f64,
}

pub fn filtering_stats(kernel: &KernelSpec, alpha: f64, t: usize) -> Result<FilteringStats> {
    if t == 0 {
        return Err(Error::Domain("filtering_stats requires t >= 1".into()));
    }
    let mut rec = GtRecursion::new(kernel, alpha)?;
    let row = rec.row_at(t - 1)?;
    let pivot = row.pivot();
    if !(pivot > 0.0 && pivot <= 1.0 + 1e-12) {
        return Err(Error::FactorizationFailure(format!(
            "pivot {pivot} outside (0, 1]"
        )));
    }
    Ok(FilteringStats {
        pivot,
        filter_error: 1.0 - pivot,
    })
}
