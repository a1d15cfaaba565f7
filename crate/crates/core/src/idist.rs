//! Infinitely divisible decomposition of `sum_{s<t} X_s^2`.
//!
//! Rotating the Gaussian vector onto the eigenbasis of its covariance writes
//! the sum of squares as independent squares `Z_j^2`, `Z_j ~ N(mu_j, v_j)`.
//! Each has log-Laplace `-1/2 log(1 + 2 alpha v) - mu^2 alpha / (1 + 2 alpha v)`:
//! a Gamma law (shape 1/2, scale `2v`) convolved with a Poisson compound of
//! exponentials (rate `mu^2 / 2v`, mean `2v`). Null directions of the
//! covariance carry a deterministic shift `mu^2`.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, MeanSpec, ProcessModel};
use crate::limits::{ell0, ell1};
use crate::matrix::SymMatrix;
use crate::quadrature::adaptive_simpson;

/// Largest horizon accepted by [`decompose`].
pub const MAX_DECOMPOSE: usize = 256;

/// Relative eigenvalue floor below which a direction is deterministic.
pub const NULL_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentKind {
    Gamma { shape: f64, scale: f64 },
    CompoundPoisson { rate: f64, exp_mean: f64 },
    Deterministic { shift: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdComponent {
    /// Index of the eigenpair the component comes from.
    pub source: usize,
    pub kind: ComponentKind,
}

impl IdComponent {
    pub fn log_laplace(&self, alpha: f64) -> f64 {
        match self.kind {
            ComponentKind::Gamma { shape, scale } => -shape * (alpha * scale).ln_1p(),
            ComponentKind::CompoundPoisson { rate, exp_mean } => {
                let x = alpha * exp_mean;
                -rate * x / (1.0 + x)
            }
            ComponentKind::Deterministic { shift } => -alpha * shift,
        }
    }

    /// The component of the `n`-th convolution root.
    fn root(&self, n: f64) -> IdComponent {
        let kind = match self.kind {
            ComponentKind::Gamma { shape, scale } => ComponentKind::Gamma {
                shape: shape / n,
                scale,
            },
            ComponentKind::CompoundPoisson { rate, exp_mean } => ComponentKind::CompoundPoisson {
                rate: rate / n,
                exp_mean,
            },
            ComponentKind::Deterministic { shift } => ComponentKind::Deterministic { shift: shift / n },
        };
        IdComponent {
            source: self.source,
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdDecomposition {
    pub t: usize,
    pub components: Vec<IdComponent>,
}

impl IdDecomposition {
    /// Sum of component log-Laplace transforms.
    pub fn log_laplace(&self, alpha: f64) -> f64 {
        self.components.iter().map(|c| c.log_laplace(alpha)).sum()
    }

    /// Law whose `n`-fold convolution is this one: shapes, rates and shifts divided by `n`.
    pub fn root(&self, n: usize) -> IdDecomposition {
        let n = n as f64;
        IdDecomposition {
            t: self.t,
            components: self.components.iter().map(|c| c.root(n)).collect(),
        }
    }
}

/// Decomposes `|X|^2` for `X ~ N(mean, cov)`.
pub fn decompose_vector(mean: &[f64], cov: &SymMatrix) -> Result<IdDecomposition> {
    let t = mean.len();
    if cov.size() != t {
        return Err(Error::SizeMismatch {
            left: t,
            right: cov.size(),
        });
    }
    let eig = SymmetricEigen::new(cov.to_dmatrix());
    let max_eig = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if t > 0 && min_eig < -1e-9 * max_eig {
        return Err(Error::NotPositiveSemidefinite {
            index: eig.eigenvalues.iamin(),
            pivot: min_eig,
        });
    }
    let floor = NULL_EIGENVALUE * max_eig;
    let mut components = Vec::new();
    for j in 0..t {
        let v = eig.eigenvalues[j];
        let q = eig.eigenvectors.column(j);
        let mu: f64 = q.iter().zip(mean).map(|(a, b)| a * b).sum();
        let mu2 = mu * mu;
        if v > floor {
            components.push(IdComponent {
                source: j,
                kind: ComponentKind::Gamma {
                    shape: 0.5,
                    scale: 2.0 * v,
                },
            });
            if mu2 > 0.0 {
                components.push(IdComponent {
                    source: j,
                    kind: ComponentKind::CompoundPoisson {
                        rate: mu2 / (2.0 * v),
                        exp_mean: 2.0 * v,
                    },
                });
            }
        } else if mu2 > 0.0 {
            components.push(IdComponent {
                source: j,
                kind: ComponentKind::Deterministic { shift: mu2 },
            });
        }
    }
    Ok(IdDecomposition { t, components })
}

/// Decomposes `sum_{s<t} X_s^2` for the model, `1 <= t <= 256`.
pub fn decompose(model: &ProcessModel, t: usize) -> Result<IdDecomposition> {
    if t == 0 || t > MAX_DECOMPOSE {
        return Err(Error::Domain(format!(
            "decompose requires 1 <= t <= {MAX_DECOMPOSE}, got {t}"
        )));
    }
    decompose_vector(&model.mean_vector(t), &model.covariance_matrix(t))
}

/// Parameters of the limit law with log-Laplace `-l0 - l1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitComponents {
    pub alpha_probe: f64,
    /// `-l0(alpha_probe)`: log-Laplace of the Thorin-class factor.
    pub thorin_log_laplace: f64,
    /// `(rate, exp_mean) = (m_inf^2 / 2f(lambda*), 2f(lambda*))`; absent when `m_inf = 0`.
    pub compound: Option<(f64, f64)>,
    pub mean_frequency: f64,
    /// `|rate x/(1+x) - l1(alpha_probe)|` with `x = alpha_probe exp_mean`.
    pub identity_gap: f64,
}

pub fn limit_components(
    kernel: &KernelSpec,
    mean: &MeanSpec,
    alpha_probe: f64,
    nodes: usize,
) -> Result<LimitComponents> {
    let lambda = mean.mean_frequency();
    let m = mean.m_inf();
    let l1 = ell1(kernel, mean, alpha_probe);
    let (compound, identity_gap) = if m == 0.0 {
        (None, l1.abs())
    } else {
        let f = kernel.spectral_density(lambda);
        if !(f > 0.0) {
            return Err(Error::DegenerateSpectrum { frequency: lambda });
        }
        let rate = m * m / (2.0 * f);
        let exp_mean = 2.0 * f;
        let x = alpha_probe * exp_mean;
        (Some((rate, exp_mean)), (rate * x / (1.0 + x) - l1).abs())
    };
    debug_assert!(identity_gap <= 1e-12 * l1.abs().max(1.0));
    Ok(LimitComponents {
        alpha_probe,
        thorin_log_laplace: -ell0(kernel, alpha_probe, nodes),
        compound,
        mean_frequency: lambda,
        identity_gap,
    })
}

fn check_density_theta(theta: f64) -> Result<()> {
    if !(theta.abs() < 1.0) || theta == 0.0 {
        return Err(Error::Domain(format!(
            "theta must lie in (-1, 0) or (0, 1), got {theta}"
        )));
    }
    Ok(())
}

/// Density of the limit law with Laplace transform `exp(-l0)` for the AR(1) kernel:
/// `f0(x) = e^{-(1+theta^2) x / 2} (2 pi)^{-1/2} |theta|^{-1} x^{-3/2} sinh(|theta| x)`.
pub fn ar1_limit_density(theta: f64, x: f64) -> Result<f64> {
    check_density_theta(theta)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    Ok(density_unchecked(theta.abs(), x))
}

fn density_unchecked(a: f64, x: f64) -> f64 {
    let y = a * x;
    let decay = (-(1.0 + a * a) * 0.5 * x).exp();
    let base = decay / (2.0 * std::f64::consts::PI).sqrt() / x.sqrt();
    if y < 1e-4 {
        base * (1.0 + y * y / 6.0)
    } else {
        // sinh(y) e^{-c x} computed as a difference of exponentials to avoid overflow.
        let c = (1.0 + a * a) * 0.5 * x;
        let sinh_decay = 0.5 * ((y - c).exp() - (-y - c).exp());
        sinh_decay / (2.0 * std::f64::consts::PI).sqrt() / a / x.powf(1.5)
    }
}

/// Numerical `int_0^inf e^{-alpha x} f0(x) dx` with its analytic tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityLaplace {
    pub value: f64,
    /// Upper bound on the neglected integral beyond `cutoff`.
    pub tail_bound: f64,
    pub cutoff: f64,
}

/// Integrates `e^{-alpha x} f0(x)` on `(0, X]` after the substitution `x = u^2`,
/// which removes the `x^{-1/2}` edge, and bounds the remainder by
/// `(2 pi)^{-1/2} / (2|theta|) X^{-3/2} e^{-cX} / c`, `c = (1-|theta|)^2/2 + alpha`.
pub fn ar1_density_laplace(theta: f64, alpha: f64) -> Result<DensityLaplace> {
    check_density_theta(theta)?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let a = theta.abs();
    let c = 0.5 * (1.0 - a).powi(2) + alpha;
    let bound = |cut: f64| {
        (2.0 * std::f64::consts::PI).sqrt().recip() / (2.0 * a) * cut.powf(-1.5) * (-c * cut).exp() / c
    };
    let mut cutoff = 1.0;
    while bound(cutoff) > 1e-13 {
        cutoff *= 1.5;
    }
    let integrand = |u: f64| {
        if u <= 0.0 {
            2.0 / (2.0 * std::f64::consts::PI).sqrt()
        } else {
            let x = u * u;
            2.0 * u * (-alpha * x).exp() * density_unchecked(a, x)
        }
    };
    let upper = cutoff.sqrt();
    // Split so that the adaptive rule resolves the peak near the origin.
    let knots = [0.0, 0.25 * upper.min(4.0), upper.min(4.0), upper];
    let value = knots
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| adaptive_simpson(integrand, w[0], w[1], 1e-13, 50))
        .sum();
    Ok(DensityLaplace {
        value,
        tail_bound: bound(cutoff),
        cutoff,
    })
}
