use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};

use crate::C64;

pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(m.clone());
    (eig.eigenvalues, eig.eigenvectors)
}

/// Principal square root of a Hermitian positive semi-definite matrix; eigenvalues
/// below zero (round-off) are clamped.
pub(crate) fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(m);
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        scaled.column_mut(j).scale_mut(s);
    }
    &scaled * vecs.adjoint()
}

pub(crate) fn trace_norm(m: &DMatrix<C64>) -> f64 {
    m.clone().singular_values().iter().sum()
}

/// `exp(-i h dt)` for a real symmetric 3×3 generator, via its eigendecomposition.
pub(crate) fn expi_symmetric3(h: &Matrix3<f64>, dt: f64) -> Matrix3<C64> {
    let eig = h.symmetric_eigen();
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let mut scaled = v;
    for j in 0..3 {
        let phase = C64::from_polar(1.0, -eig.eigenvalues[j] * dt);
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= phase);
    }
    scaled * v.transpose()
}

pub(crate) fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub(crate) fn kron_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    DVector::from_iterator(
        a.len() * b.len(),
        a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)),
    )
}
