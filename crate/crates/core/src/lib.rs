//! Laplace transforms of summed squares of asymptotically stationary Gaussian
//! processes: exact finite-horizon values, their limit
//! `lim (1/t) log E[exp(-alpha sum_{s<t} X_s^2)] = -(l0(alpha) + l1(alpha))`,
//! the Wiener-Hopf quantities behind that limit, and the infinitely divisible
//! structure of the laws involved.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ar1oracle;
pub mod cli;
pub mod error;
pub mod factorization;
pub mod idist;
pub mod kernels;
pub mod laplace;
pub mod limits;
pub mod matrix;
pub mod mc;
pub mod quadrature;
pub mod toeplitz;

pub use error::{Error, Result};
pub use kernels::{KernelSpec, MeanSpec, Perturbation, ProcessModel};
pub use matrix::SymMatrix;
