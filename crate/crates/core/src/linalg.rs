//! Small dense complex matrix helpers shared by the state and engine modules.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub(crate) fn expi(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Largest |M - M†| entry.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// The input is symmetrized first so that rounding-level anti-Hermitian
/// parts cannot leak into the spectrum.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let (vals, _) = hermitian_eigen(m)?;
    Ok(vals)
}

/// Eigenvalues (ascending) and the matching eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !m.is_square() {
        return Err(Error::Numeric(format!(
            "eigenproblem on non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((vals, vecs))
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues below zero (rounding noise) are treated as zero.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eigen(m)?;
    let n = m.nrows();
    let root = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(vals[i].max(0.0).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    Ok(&vecs * root * vecs.adjoint())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
