//! Closed forms for the stationary AR(1) kernel `k(t) = theta^|t| / (1 - theta^2)`.
//!
//! With `f(lambda) = 1 / (1 + theta^2 - 2 theta cos lambda)`, the roots
//! `zeta-` and `zeta+` of `zeta^2 - (theta + 1/theta + 2 alpha/theta) zeta + 1`
//! satisfy `0 < |zeta-| < 1 < |zeta+|`, `zeta- zeta+ = 1`, and
//! `l0(alpha) = 1/2 log(theta zeta+)`.

use crate::error::{Error, Result};

/// Closed-form limit quantities for one `(theta, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Limit {
    pub theta: f64,
    pub alpha: f64,
    pub zeta_minus: f64,
    pub zeta_plus: f64,
    pub ell0: f64,
    pub ell1: f64,
}

fn check(theta: f64, alpha: f64, allow_zero: bool) -> Result<()> {
    if !theta.is_finite() || theta.abs() >= 1.0 || (!allow_zero && theta == 0.0) {
        return Err(Error::Domain(format!(
            "theta must lie in (-1, 0) or (0, 1), got {theta}"
        )));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    Ok(())
}

/// `(zeta-, zeta+)`; the larger-magnitude root comes from the quadratic
/// formula, the other from the unit product.
pub fn ar1_roots(theta: f64, alpha: f64) -> Result<(f64, f64)> {
    check(theta, alpha, false)?;
    let b = theta + 1.0 / theta + 2.0 * alpha / theta;
    let disc = (b * b - 4.0).max(0.0).sqrt();
    let plus = 0.5 * (b + b.signum() * disc);
    Ok((1.0 / plus, plus))
}

/// `l0(alpha) = 1/2 log(1/2 (theta^2 + 1 + 2 alpha + sqrt(((theta+1)^2 + 2 alpha)((theta-1)^2 + 2 alpha))))`.
///
/// Valid at `theta = 0`, where it reduces to `1/2 log(1 + 2 alpha)`.
pub fn ar1_ell0(theta: f64, alpha: f64) -> Result<f64> {
    check(theta, alpha, true)?;
    let two_a = 2.0 * alpha;
    let radical = (((theta + 1.0).powi(2) + two_a) * ((theta - 1.0).powi(2) + two_a)).sqrt();
    Ok(0.5 * (0.5 * (theta * theta + 1.0 + two_a + radical)).ln())
}

/// `l0(alpha) = 1/2 log(theta zeta+)`.
pub fn ar1_ell0_roots(theta: f64, alpha: f64) -> Result<f64> {
    let (_, plus) = ar1_roots(theta, alpha)?;
    Ok(0.5 * (theta * plus).ln())
}

/// `l1(alpha) = m_inf^2 alpha (1 - theta)^2 / ((1 - theta)^2 + 2 alpha)`.
pub fn ar1_ell1(theta: f64, m_inf: f64, alpha: f64) -> Result<f64> {
    check(theta, alpha, true)?;
    let c = (1.0 - theta).powi(2);
    Ok(m_inf * m_inf * alpha * c / (c + 2.0 * alpha))
}

pub fn ar1_limit(theta: f64, m_inf: f64, alpha: f64) -> Result<Ar1Limit> {
    let (zeta_minus, zeta_plus) = ar1_roots(theta, alpha)?;
    Ok(Ar1Limit {
        theta,
        alpha,
        zeta_minus,
        zeta_plus,
        ell0: ar1_ell0(theta, alpha)?,
        ell1: ar1_ell1(theta, m_inf, alpha)?,
    })
}
