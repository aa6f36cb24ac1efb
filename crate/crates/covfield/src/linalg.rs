//! Dense complex linear-algebra helpers shared by every module: Hermitian
//! eigendecompositions with a fixed ordering, spectral functional calculus,
//! norms, and column-stacking vectorization.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{CovError, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = Complex::new(0.0, 0.0);
pub const ONE: C64 = Complex::new(1.0, 0.0);

pub fn cr(x: f64) -> C64 {
    Complex::new(x, 0.0)
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: CMat,
}

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized first
/// so callers may pass matrices carrying small anti-Hermitian rounding noise.
pub fn hermitian_eigen(m: &CMat) -> HermitianEigen {
    assert_eq!(m.nrows(), m.ncols(), "hermitian_eigen needs a square matrix");
    let sym = hermitian_part(m).symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        sym.eigenvalues[b]
            .partial_cmp(&sym.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| sym.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        vectors.set_column(new_col, &sym.eigenvectors.column(old_col));
    }
    HermitianEigen { values, vectors }
}

impl HermitianEigen {
    /// Reassemble `U f(λ) U†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let diag = CVec::from_iterator(n, self.values.iter().map(|&l| cr(f(l))));
        &self.vectors * CMat::from_diagonal(&diag) * self.vectors.adjoint()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * cr(0.5)
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn frobenius_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_deviation(m: &CMat) -> f64 {
    frobenius_norm(&(m - m.adjoint()))
}

/// Smallest eigenvalue of a (nearly) Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m).min_value()
}

/// Column-stacking vectorization; nalgebra stores column-major so this is a copy.
pub fn vec_col(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvec_col(rows: usize, cols: usize, v: &CVec) -> CMat {
    assert_eq!(v.len(), rows * cols);
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Solve `h x = b` for Hermitian positive definite `h` via LU.
pub fn solve(h: &CMat, b: &CVec) -> Result<CVec> {
    h.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| CovError::Domain("singular linear system".into()))
}

pub fn try_inverse(m: &CMat) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| CovError::Domain("matrix is not invertible".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending_and_reassembles() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[cr(1.0), Complex::new(0.0, -2.0), Complex::new(0.0, 2.0), cr(5.0)],
        );
        let e = hermitian_eigen(&m);
        assert!(e.values[0] >= e.values[1]);
        let back = e.map(|l| l);
        assert!(frobenius_norm(&(&back - &m)) < 1e-12);
    }

    #[test]
    fn vec_unvec_roundtrip() {
        let m = CMat::from_fn(3, 3, |i, j| Complex::new(i as f64, j as f64));
        let v = vec_col(&m);
        assert_eq!(unvec_col(3, 3, &v), m);
    }
}
