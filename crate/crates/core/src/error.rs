use thiserror::Error;

/// Errors raised by the numerical modules.
///
/// Display strings start with the variant name so that the CLI can report
/// which failure occurred without further mapping.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ZeroStartVariance: K(0,0) = {0} is not positive")]
    ZeroStartVariance(f64),

    #[error("NotPositiveSemidefinite: pivot {pivot} at index {index}")]
    NotPositiveSemidefinite { index: usize, pivot: f64 },

    #[error("SizeMismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("FactorizationFailure: {0}")]
    FactorizationFailure(String),

    #[error("AlphaOutOfRange: 2*alpha*M = {product} must be < 1 (alpha = {alpha}, M = {abs_sum})")]
    AlphaOutOfRange {
        alpha: f64,
        abs_sum: f64,
        product: f64,
    },

    #[error("NoConvergence: truncation {truncation} exceeded the limit without meeting tolerance")]
    NoConvergence { truncation: usize },

    #[error("DegenerateSpectrum: f({frequency}) = 0 with nonzero asymptotic mean")]
    DegenerateSpectrum { frequency: f64 },

    #[error("DomainError: {0}")]
    Domain(String),

    #[error("InvalidKernel: {0}")]
    InvalidKernel(String),

    #[error("InvalidModel: {0}")]
    InvalidModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
