//! Dense square matrices used throughout the crate.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Read access to a dense square matrix.
pub trait SquareMatrix {
    fn size(&self) -> usize;
    fn entry(&self, row: usize, col: usize) -> f64;
}

impl SquareMatrix for DMatrix<f64> {
    fn size(&self) -> usize {
        assert_eq!(self.nrows(), self.ncols(), "matrix is not square");
        self.nrows()
    }

    fn entry(&self, row: usize, col: usize) -> f64 {
        self[(row, col)]
    }
}

/// Real symmetric matrix, stored densely in row-major order.
///
/// Entries are produced from the lower triangle and mirrored, so `A = A*`
/// holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds the matrix from `entry(s, r)`, evaluated only for `r <= s`.
    pub fn from_fn(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for s in 0..n {
            for r in 0..=s {
                let v = entry(s, r);
                data[s * n + r] = v;
                data[r * n + s] = v;
            }
        }
        SymMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |s, r| if s == r { 1.0 } else { 0.0 })
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from a row-major buffer; fails unless the buffer is exactly symmetric and finite.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::SizeMismatch {
                left: data.len(),
                right: n * n,
            });
        }
        for s in 0..n {
            for r in 0..n {
                let v = data[s * n + r];
                if !v.is_finite() || v != data[r * n + s] {
                    return Err(Error::InvalidModel(format!(
                        "matrix entry ({s},{r}) is not finite or not symmetric"
                    )));
                }
            }
        }
        Ok(SymMatrix { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: usize, r: usize) -> f64 {
        self.data[s * self.n + r]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.data[s * self.n..(s + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.n).map(|s| self.get(s, s)).fold(0.0, f64::max)
    }

    /// `I + scale * self`.
    pub fn shifted_identity(&self, scale: f64) -> SymMatrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= scale;
        }
        for s in 0..self.n {
            out.data[s * self.n + s] += 1.0;
        }
        out
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if self.n != other.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(SymMatrix { n: self.n, data })
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|s| self.row(s).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }
}

impl SquareMatrix for SymMatrix {
    fn size(&self) -> usize {
        self.n
    }

    fn entry(&self, row: usize, col: usize) -> f64 {
        self.get(row, col)
    }
}
