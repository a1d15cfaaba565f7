//! Monte Carlo estimates of `L_t(alpha)` from exact Gaussian samples.
//!
//! Path `i` draws its normals from a ChaCha8 stream selected by `i` under the
//! run seed, so every path is a function of `(seed, i)` alone and the estimate
//! does not depend on how paths are spread over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factorization::factorize;
use crate::kernels::ProcessModel;
use crate::matrix::SymMatrix;

/// Draws `x = mean + C z` with `C C* = cov` taken from the `LDL*` factors.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    mean: Vec<f64>,
    root: Vec<f64>,
    seed: u64,
}

impl GaussianSampler {
    pub fn new(mean: Vec<f64>, cov: &SymMatrix, seed: u64) -> Result<Self> {
        if mean.len() != cov.size() {
            return Err(Error::SizeMismatch {
                left: mean.len(),
                right: cov.size(),
            });
        }
        let root = factorize(cov)?.square_root();
        Ok(GaussianSampler { mean, root, seed })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Writes path `index` into `out`, using `z` as scratch.
    fn fill(&self, index: u64, z: &mut [f64], out: &mut [f64]) {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        for i in 0..n {
            let row = &self.root[i * n..i * n + i + 1];
            out[i] = self.mean[i] + row.iter().zip(&z[..=i]).map(|(c, v)| c * v).sum::<f64>();
        }
    }

    pub fn path(&self, index: u64) -> Vec<f64> {
        let n = self.dim();
        let mut z = vec![0.0; n];
        let mut out = vec![0.0; n];
        self.fill(index, &mut z, &mut out);
        out
    }
}

/// `n` paths of `(X_0, .., X_{t-1})`.
pub fn sample_paths(model: &ProcessModel, t: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let sampler = GaussianSampler::new(model.mean_vector(t), &model.covariance_matrix(t), seed)?;
    Ok((0..n as u64).into_par_iter().map(|i| sampler.path(i)).collect())
}

/// `n` paths of the law conditioned on `X_0 = x`; every path starts at `x` exactly.
pub fn sample_conditioned_paths(
    model: &ProcessModel,
    x: f64,
    t: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let start = model.condition_on_start(x, t)?;
    let sampler = GaussianSampler::new(start.mean, &start.cov, seed)?;
    Ok((0..n as u64).into_par_iter().map(|i| sampler.path(i)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub t: usize,
    pub alpha: f64,
    pub n_samples: usize,
    /// Sample mean of `exp(-alpha sum x_s^2)`.
    pub mean: f64,
    pub std_error: f64,
    pub seed: u64,
}

impl McEstimate {
    pub fn log_mean(&self) -> f64 {
        self.mean.ln()
    }

    /// `(mean - exact) / std_error`; zero when both the error and the gap vanish.
    pub fn z_score(&self, exact: f64) -> f64 {
        let gap = self.mean - exact;
        if self.std_error == 0.0 {
            if gap == 0.0 {
                0.0
            } else {
                gap.signum() * f64::INFINITY
            }
        } else {
            gap / self.std_error
        }
    }
}

const CHUNK: u64 = 1024;

/// Mean and standard error of `exp(-alpha S)` over `n` sampled paths.
pub fn estimate_laplace(sampler: &GaussianSampler, alpha: f64, n: usize) -> Result<McEstimate> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    if n == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    let t = sampler.dim();
    let n64 = n as u64;
    // Per-chunk (sum, sum of squares); chunks are combined in index order.
    let partials: Vec<(f64, f64)> = (0..n64.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut z = vec![0.0; t];
            let mut x = vec![0.0; t];
            let (mut s1, mut s2) = (0.0, 0.0);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n64) {
                sampler.fill(i, &mut z, &mut x);
                let w = (-alpha * x.iter().map(|v| v * v).sum::<f64>()).exp();
                s1 += w;
                s2 += w * w;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let nf = n as f64;
    let mean = s1 / nf;
    let var = if n > 1 {
        ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        t,
        alpha,
        n_samples: n,
        mean,
        std_error: (var / nf).sqrt(),
        seed: sampler.seed,
    })
}

/// Monte Carlo estimate of `L_t(alpha)` for the model.
pub fn estimate_log_laplace(
    model: &ProcessModel,
    alpha: f64,
    t: usize,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    let sampler = GaussianSampler::new(model.mean_vector(t), &model.covariance_matrix(t), seed)?;
    estimate_laplace(&sampler, alpha, n)
}
