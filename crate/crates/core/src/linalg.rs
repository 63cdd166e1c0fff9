//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
#[cfg(test)]
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Symmetrize `m` as (m + m*)/2 so that round-off does not break Hermitian eigen-solves.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Ascending eigenpairs of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn lambda_max(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).last().copied().unwrap_or(0.0)
}

pub fn lambda_min(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Apply a scalar function to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vecs.clone();
    for j in 0..n {
        let s = Complex64::new(f(vals[j]), 0.0);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    scaled * vecs.adjoint()
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = m.singular_values().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn operator_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular value counting a zero for every missing column
/// (a wide matrix has min(rows, cols) singular values, a tall one `cols`).
pub fn smallest_singular_value(m: &CMatrix) -> f64 {
    if m.ncols() > m.nrows() {
        return 0.0;
    }
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the column span, dropping directions with singular
/// value below `tol` relative to the largest.
pub fn orthonormal_basis(m: &CMatrix, tol: f64) -> CMatrix {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * top.max(f64::MIN_POSITIVE))
        .collect();
    let mut out = CMatrix::zeros(m.nrows(), keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        out.set_column(dst, &u.column(src));
    }
    out
}

/// Numerical rank relative to the largest singular value.
pub fn rank(m: &CMatrix, tol: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    if top <= tol {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * top).count()
}

/// Left singular vector for the smallest singular value of a square matrix,
/// rotated so that its first nonzero entry is real and positive.
pub fn smallest_left_singular_vector(m: &CMatrix) -> CVector {
    let aat = m * m.adjoint();
    let (_, vecs) = hermitian_eigen(&aat);
    let mut v: CVector = vecs.column(0).into_owned();
    normalize_phase(&mut v);
    v
}

pub fn normalize_phase(v: &mut CVector) {
    if let Some(p) = v.iter().find(|c| c.norm() > 1e-12).copied() {
        let rot = p.conj() / p.norm();
        v.iter_mut().for_each(|c| *c *= rot);
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]));
        assert_eq!(hermitian_eigenvalues(&m), vec![1.0, 3.0]);
        let sq = hermitian_function(&m, f64::sqrt);
        assert!((sq[(0, 0)].re - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rank_and_basis() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ONE, ONE]);
        assert_eq!(rank(&m, 1e-10), 1);
        let b = orthonormal_basis(&m, 1e-10);
        assert_eq!(b.ncols(), 1);
        assert!((b.column(0).norm() - 1.0).abs() < 1e-14);
    }
}
