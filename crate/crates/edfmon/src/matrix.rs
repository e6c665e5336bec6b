//! Small dense symmetric-positive-definite linear algebra: Cholesky
//! factorization, forward solves and the Mahalanobis-like norm
//!
//! ```text
//! ‖y‖_M = sqrt(yᵀ M y / p),   M = Σ⁻¹,
//! ```
//!
//! used to standardize indicator-vector differences. Everything here works on
//! p×p matrices with p small (a few dozen at most); no attempt is made at
//! large-matrix performance.

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check on construction.
const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric positive-definite p×p matrix, row-major.
///
/// Symmetry is validated on construction and the stored entries are
/// symmetrized as (A + Aᵀ)/2 to absorb accumulation error; positive
/// definiteness surfaces when [`cholesky`] is attempted.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SpdMatrix {
    pub fn new(dim: usize, mut entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        for i in 0..dim {
            for j in 0..i {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i];
                if (a - b).abs() > SYMMETRY_TOL * f64::max(1.0, a.abs()) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
                let avg = 0.5 * (a + b);
                entries[i * dim + j] = avg;
                entries[j * dim + i] = avg;
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    /// Diagonal matrix with the given variances.
    pub fn diagonal(vars: &[f64]) -> Self {
        let dim = vars.len();
        let mut entries = vec![0.0; dim * dim];
        for (i, v) in vars.iter().enumerate() {
            entries[i * dim + i] = *v;
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Adds `ridge` to every diagonal entry.
    pub(crate) fn add_ridge(&mut self, ridge: f64) {
        for i in 0..self.dim {
            self.entries[i * self.dim + i] += ridge;
        }
    }
}

/// Lower-triangular Cholesky factor L with L·Lᵀ reproducing the source matrix.
#[derive(Debug, Clone)]
pub struct LowerTriangular {
    dim: usize,
    entries: Vec<f64>,
}

impl LowerTriangular {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Solves L z = b in place; `b` becomes z.
    pub fn forward_solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let row = &self.entries[i * n..i * n + i];
            let mut acc = b[i];
            for (l, z) in row.iter().zip(b.iter()) {
                acc -= l * z;
            }
            b[i] = acc / self.entries[i * n + i];
        }
    }

    pub fn forward_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: b.len(),
            });
        }
        let mut z = b.to_vec();
        self.forward_solve_in_place(&mut z);
        Ok(z)
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Fails with [`Error::NotPositiveDefinite`] when a pivot is not strictly
/// positive, which typically signals a degenerate point set or a too-small
/// learning sample.
pub fn cholesky(a: &SpdMatrix) -> Result<LowerTriangular> {
    let n = a.dim;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a.entries[i * n + j];
            for t in 0..j {
                acc -= l[i * n + t] * l[j * n + t];
            }
            if i == j {
                if !(acc > 0.0) || !acc.is_finite() {
                    return Err(Error::NotPositiveDefinite { index: i, pivot: acc });
                }
                l[i * n + i] = acc.sqrt();
            } else {
                l[i * n + j] = acc / l[j * n + j];
            }
        }
    }
    Ok(LowerTriangular { dim: n, entries: l })
}

/// The weighted norm ‖y‖ = sqrt((yᵀ Σ⁻¹ y)/p), computed by forward-solving
/// L z = y for the Cholesky factor L of Σ and returning sqrt(zᵀz / p).
pub fn mahalanobis_norm(y: &[f64], l: &LowerTriangular) -> Result<f64> {
    let z = l.forward_solve(y)?;
    let ss: f64 = z.iter().map(|v| v * v).sum();
    Ok((ss / l.dim as f64).sqrt())
}
