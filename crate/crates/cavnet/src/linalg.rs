//! Small dense complex linear-algebra helpers shared by the simulator.
//!
//! Everything here operates on `ndarray` arrays of `Complex64`. Hermitian
//! eigendecomposition is delegated to LAPACK (`zheev` via `ndarray-linalg`).

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use thiserror::Error;

pub type CVec = Array1<Complex64>;
pub type CMat = Array2<Complex64>;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max |M - M^H| = {max_dev:.3e})")]
    NotHermitian { max_dev: f64 },
    #[error("eigendecomposition failed: {0}")]
    Backend(String),
}

pub fn identity(dim: usize) -> CMat {
    Array2::eye(dim)
}

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_deviation(m: &CMat) -> f64 {
    let mut max_dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            max_dev = max_dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    max_dev
}

/// Largest entrywise deviation of `U^H U` from the identity.
pub fn unitarity_deviation(u: &CMat) -> f64 {
    let product = dagger(u).dot(u);
    let mut max_dev: f64 = 0.0;
    for i in 0..u.nrows() {
        for j in 0..u.ncols() {
            let expect = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            max_dev = max_dev.max((product[(i, j)] - expect).norm());
        }
    }
    max_dev
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending, the k-th
/// column of the returned matrix is the eigenvector for the k-th eigenvalue.
pub struct HermitianEig {
    pub values: Array1<f64>,
    pub vectors: CMat,
}

impl HermitianEig {
    pub fn new(m: &CMat, tol: f64) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let max_dev = hermiticity_deviation(m);
        if max_dev > tol {
            return Err(LinalgError::NotHermitian { max_dev });
        }
        // LAPACK consumes column-major storage; for our row-major arrays the
        // backend effectively diagonalizes M^T = conj(M), so the eigenvectors
        // come back conjugated. Feed it a standard-layout copy and undo that.
        let owned = m.as_standard_layout().to_owned();
        let (values, vectors) = owned
            .eigh(UPLO::Lower)
            .map_err(|e| LinalgError::Backend(e.to_string()))?;
        let vectors = vectors.mapv(|z| z.conj());
        Ok(Self { values, vectors })
    }

    /// exp(scale * M) applied through the eigenbasis.
    pub fn exp_scaled(&self, scale: Complex64) -> CMat {
        let phases: CVec = self.values.mapv(|e| (scale * e).exp());
        let scaled = &self.vectors * &phases; // scales column k by phases[k]
        scaled.dot(&dagger(&self.vectors))
    }

    /// exp(scale * M) v without forming the full matrix.
    pub fn propagate(&self, scale: Complex64, v: &CVec) -> CVec {
        let coeffs = dagger(&self.vectors).dot(v);
        let evolved: CVec = self
            .values
            .iter()
            .zip(coeffs.iter())
            .map(|(e, c)| (scale * *e).exp() * c)
            .collect();
        self.vectors.dot(&evolved)
    }
}

/// Kronecker-embed factor operators into a register with the given
/// per-subsystem dimensions. `factors` maps register positions to operators;
/// absent positions get the identity.
pub fn embed_operator(dims: &[usize], factors: &[(usize, &CMat)]) -> CMat {
    let mut result = Array2::from_elem((1, 1), Complex64::new(1.0, 0.0));
    for (pos, &dim) in dims.iter().enumerate() {
        let factor = factors
            .iter()
            .find(|(p, _)| *p == pos)
            .map(|(_, op)| (*op).clone())
            .unwrap_or_else(|| identity(dim));
        result = ndarray::linalg::kron(&result, &factor);
    }
    result
}
