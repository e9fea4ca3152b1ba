//! Small dense complex-matrix helpers shared across modules.
//!
//! All matrices here are desk-scale (dimension ≲ 40), so dense SVD and
//! Hermitian eigensolves are the right tool.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Hermitian part `(M + M†)/2`.
pub fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

/// Hermitian part of `e^{iθ} M`.
pub fn rotated_hermitian_part(m: &DMatrix<Complex64>, theta: f64) -> DMatrix<Complex64> {
    let phase = Complex64::from_polar(1.0, theta);
    let rotated = m.map(|v| v * phase);
    hermitian_part(&rotated)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn lambda_min_hermitian(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Orthonormal basis of the column range, with rank decided by singular
/// values above `rel_tol` times the largest one.
pub fn orthonormal_range(m: &DMatrix<Complex64>, rel_tol: f64) -> DMatrix<Complex64> {
    let rows = m.nrows();
    if m.ncols() == 0 || m.iter().all(|v| v.norm() == 0.0) {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with u requested");
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > rel_tol * smax)
        .count();
    u.columns(0, rank).into_owned()
}

/// Extend orthonormal columns to a full unitary `[basis | complement]`.
///
/// Uses modified Gram–Schmidt against the identity columns, run twice for
/// orthogonality at the 1e-15 level.
pub fn complete_unitary(basis: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = basis.nrows();
    let mut cols: Vec<DVector<Complex64>> = basis.column_iter().map(|c| c.into_owned()).collect();
    let mut cand = 0;
    while cols.len() < dim {
        assert!(cand < dim, "unitary completion ran out of candidates");
        let mut v = DVector::<Complex64>::zeros(dim);
        v[cand] = Complex64::ONE;
        for _ in 0..2 {
            for c in &cols {
                let coeff = c.dotc(&v);
                v.axpy(-coeff, c, Complex64::ONE);
            }
        }
        let nrm = v.norm();
        if nrm > 1e-6 {
            cols.push(v.unscale(nrm));
        }
        cand += 1;
    }
    DMatrix::from_columns(&cols)
}

/// Pointwise inverse with a relative singularity guard.
pub fn try_inverse(m: &DMatrix<Complex64>, rel_tol: f64) -> Option<DMatrix<Complex64>> {
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smax == 0.0 || smin <= rel_tol * smax {
        return None;
    }
    m.clone().try_inverse()
}

/// Smallest and largest singular values.
pub fn singular_extremes(m: &DMatrix<Complex64>) -> (f64, f64) {
    let sv = m.clone().singular_values();
    (sv.min(), sv.max())
}

/// Block-diagonal matrix with `copies` copies of `m` (rectangular allowed).
pub fn block_diag_copies(m: &DMatrix<Complex64>, copies: usize) -> DMatrix<Complex64> {
    let (rows, cols) = m.shape();
    let mut out = DMatrix::zeros(rows * copies, cols * copies);
    for c in 0..copies {
        out.view_mut((c * rows, c * cols), (rows, cols))
            .copy_from(m);
    }
    out
}

pub fn is_finite_matrix(m: &DMatrix<Complex64>) -> bool {
    m.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn range_of_rank_one_matrix() {
        let m = DMatrix::from_column_slice(
            3,
            2,
            &[
                c(1.0, 0.0),
                c(0.0, 1.0),
                c(2.0, 0.0),
                c(2.0, 0.0),
                c(0.0, 2.0),
                c(4.0, 0.0),
            ],
        );
        let u = orthonormal_range(&m, 1e-10);
        assert_eq!(u.ncols(), 1);
        assert!((u.column(0).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unitary_completion_is_unitary() {
        let m = DMatrix::from_column_slice(
            4,
            2,
            &[
                c(1.0, 0.5),
                c(0.0, 1.0),
                c(2.0, 0.0),
                c(-1.0, 0.0),
                c(0.5, 0.0),
                c(1.0, -1.0),
                c(0.0, 0.0),
                c(3.0, 1.0),
            ],
        );
        let u0 = orthonormal_range(&m, 1e-10);
        let u = complete_unitary(&u0);
        let defect = (u.adjoint() * &u - DMatrix::<Complex64>::identity(4, 4)).norm();
        assert!(defect < 1e-13, "unitarity defect {defect}");
    }

    #[test]
    fn hermitian_lambda_min() {
        let m = DMatrix::from_column_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(2.0, 0.0)],
        );
        assert!((lambda_min_hermitian(&m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diag() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(3.0, 0.0), c(0.0, -4.0)]));
        assert!((spectral_norm(&m) - 4.0).abs() < 1e-12);
    }
}
