//! Small dense complex linear algebra helpers shared by the whole pipeline.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Max elementwise magnitude of `M - M^dagger`.
pub fn hermiticity_residual(m: &CMat) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

/// Max elementwise magnitude of `U^dagger U - I`.
pub fn unitarity_residual(u: &CMat) -> f64 {
    let n = u.nrows();
    let prod = u.adjoint() * u;
    let mut r: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            r = r.max((prod[(i, j)] - expect).norm());
        }
    }
    r
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
/// Returns `(energies, vectors)` with eigenvectors as orthonormal columns.
pub fn hermitian_eigen(m: &CMat) -> (DVector<f64>, CMat) {
    let se = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let energies = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    (energies, vectors)
}

/// `exp(-i K)` for Hermitian `K`, evaluated through the eigendecomposition of
/// `K` so the result is unitary to round-off regardless of the norm of `K`.
pub fn expi_hermitian(k: &CMat) -> CMat {
    let (e, v) = hermitian_eigen(k);
    let n = k.nrows();
    let mut scaled = v.clone();
    for j in 0..n {
        let phase = C64::from_polar(1.0, -e[j]);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * v.adjoint()
}

/// Max elementwise magnitude of `A - B`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            r = r.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    r
}

/// Largest eigenvalue magnitude of a Hermitian matrix.
pub fn spectral_radius_hermitian(m: &CMat) -> f64 {
    let (e, _) = hermitian_eigen(m);
    e.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}
