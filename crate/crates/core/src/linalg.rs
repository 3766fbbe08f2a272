//! Sequential wrappers over faer's dense decompositions.
//!
//! Every call runs with `Par::Seq` so results are bit-identical for any
//! worker count.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::svd::{self, ComputeSvdVectors};
use faer::linalg::matmul::matmul;
use faer::diag::Diag;
use faer::{c64, Accum, Mat, MatRef, Par};

/// Eigenvalues (nondecreasing) and orthonormal eigenvectors (columns) of a
/// real symmetric matrix; only the lower triangle is read.
pub fn sym_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>), String> {
    let n = a.nrows();
    let mut s = Diag::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    let par = Par::Seq;
    let mut mem = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        Some(u.as_mut()),
        par,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| format!("{e:?}"))?;
    Ok((s.column_vector().iter().copied().collect(), u))
}

pub fn sym_eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<f64>, String> {
    let n = a.nrows();
    let mut s = Diag::<f64>::zeros(n);
    let par = Par::Seq;
    let mut mem = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::No,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(a, s.as_mut(), None, par, MemStack::new(&mut mem), Default::default())
        .map_err(|e| format!("{e:?}"))?;
    Ok(s.column_vector().iter().copied().collect())
}

/// Eigenvalues of a complex Hermitian matrix, nondecreasing.
pub fn hermitian_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>, String> {
    let n = a.nrows();
    let mut s = Diag::<c64>::zeros(n);
    let par = Par::Seq;
    let mut mem = MemBuffer::new(evd::self_adjoint_evd_scratch::<c64>(
        n,
        ComputeEigenvectors::No,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(a, s.as_mut(), None, par, MemStack::new(&mut mem), Default::default())
        .map_err(|e| format!("{e:?}"))?;
    Ok(s.column_vector().iter().map(|z| z.re).collect())
}

/// Singular values, nonincreasing.
pub fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>, String> {
    let k = a.nrows().min(a.ncols());
    let mut s = Diag::<f64>::zeros(k);
    let par = Par::Seq;
    let mut mem = MemBuffer::new(svd::svd_scratch::<f64>(
        a.nrows(),
        a.ncols(),
        ComputeSvdVectors::No,
        ComputeSvdVectors::No,
        par,
        Default::default(),
    ));
    svd::svd(a, s.as_mut(), None, None, par, MemStack::new(&mut mem), Default::default())
        .map_err(|e| format!("{e:?}"))?;
    Ok(s.column_vector().iter().copied().collect())
}

/// `a · b`, single-threaded.
pub fn matmul_seq<T: faer::traits::ComplexField>(a: MatRef<'_, T>, b: MatRef<'_, T>) -> Mat<T> {
    let mut out = Mat::<T>::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, T::one_impl(), Par::Seq);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_symmetric_problem() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 1.0 });
        let (vals, vecs) = sym_eigen(a.as_ref()).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let v0 = vecs.col(0);
        assert!((v0[0] + v0[1]).abs() < 1e-14);
        assert_eq!(sym_eigenvalues(a.as_ref()).unwrap().len(), 2);
    }

    #[test]
    fn singular_values_of_rank_one() {
        let a = Mat::from_fn(3, 3, |i, j| ((i + 1) * (j + 1)) as f64);
        let s = singular_values(a.as_ref()).unwrap();
        assert!((s[0] - 14.0).abs() < 1e-12);
        assert!(s[1].abs() < 1e-12 && s[2].abs() < 1e-12);
    }

    #[test]
    fn hermitian_spectrum() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2
        let a = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c64::new(0.0, 1.0),
            (1, 0) => c64::new(0.0, -1.0),
            _ => c64::new(1.0, 0.0),
        });
        let e = hermitian_eigenvalues(a.as_ref()).unwrap();
        assert!(e[0].abs() < 1e-14 && (e[1] - 2.0).abs() < 1e-14);
    }
}
