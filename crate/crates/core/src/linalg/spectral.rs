use serde::Serialize;

use super::eigen::{eigh, eigh_unchecked};
use super::{LinalgError, Matrix, Result, C64};

/// Largest dimension handed to the dense Jacobi solver.
pub const MAX_DENSE_DIM: usize = 512;

/// Relative eigenvalue cutoff below which pseudo-inverses treat a direction as null.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// The block matrix `[[0, A], [A*, 0]]`.
///
/// Its extreme eigenvalues are `+-||A||`.
pub fn hermitian_dilation(a: &Matrix) -> Matrix {
    let (d1, d2) = a.dims();
    let n = d1 + d2;
    Matrix::from_fn(n, n, |i, j| {
        if i < d1 && j >= d1 {
            a[(i, j - d1)]
        } else if i >= d1 && j < d1 {
            a[(j, i - d1)].conj()
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Gram matrix on the smaller side: `A A*` when `d1 <= d2`, else `A* A`.
fn small_gram(a: &Matrix) -> Matrix {
    if a.rows() <= a.cols() {
        a * &a.adjoint()
    } else {
        &a.adjoint() * a
    }
}

/// Singular values in descending order, `min(d1, d2)` of them.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    let k = a.rows().min(a.cols());
    if k > MAX_DENSE_DIM {
        return Err(LinalgError::TooLarge(k));
    }
    let e = eigh_unchecked(&small_gram(a))?;
    Ok(e.eigenvalues().iter().rev().map(|&l| l.max(0.0).sqrt()).collect())
}

/// Largest singular value, `sqrt(lambda_max(A* A))`.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatrixNorms {
    pub frobenius: f64,
    pub trace_norm: f64,
    pub max_norm: f64,
    /// Largest row or column 1-norm.
    pub rc1: f64,
    /// Largest row or column 2-norm.
    pub rc2: f64,
}

pub fn norms(a: &Matrix) -> Result<MatrixNorms> {
    let (d1, d2) = a.dims();
    let mut row_p1 = vec![0.0_f64; d1];
    let mut row_p2 = vec![0.0_f64; d1];
    let mut col_p1 = vec![0.0_f64; d2];
    let mut col_p2 = vec![0.0_f64; d2];
    for i in 0..d1 {
        for j in 0..d2 {
            let z = a[(i, j)];
            let m = z.norm();
            row_p1[i] += m;
            col_p1[j] += m;
            row_p2[i] += z.norm_sqr();
            col_p2[j] += z.norm_sqr();
        }
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(MatrixNorms {
        frobenius: a.frobenius(),
        trace_norm: singular_values(a)?.iter().sum(),
        max_norm: a.max_abs(),
        rc1: max(&row_p1).max(max(&col_p1)),
        rc2: max(&row_p2).max(max(&col_p2)).sqrt(),
    })
}

fn check_psd(a: &Matrix) -> Result<super::HermitianEigen> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare(a.rows(), a.cols()));
    }
    let defect = a.hermitian_defect();
    if defect > 1e-10 * (1.0 + a.max_abs()) {
        return Err(LinalgError::NotHermitian { defect });
    }
    let e = eigh_unchecked(a)?;
    let top = e.lambda_max().max(0.0);
    if e.lambda_min() < -1e-8 * top {
        return Err(LinalgError::NotPsd {
            lambda_min: e.lambda_min(),
        });
    }
    Ok(e)
}

/// `A^{+1/2}`: inverse square root on eigenvalues above `rank_tol * lambda_max`, zero elsewhere.
pub fn pseudo_inv_sqrt(a: &Matrix, rank_tol: f64) -> Result<Matrix> {
    let e = check_psd(a)?;
    let cutoff = rank_tol * e.lambda_max();
    Ok(e.apply_real(|l| if l > cutoff && l > 0.0 { l.sqrt().recip() } else { 0.0 }))
}

/// Moore-Penrose pseudo-inverse of a PSD matrix with the same cutoff rule.
pub fn pseudo_inverse(a: &Matrix, rank_tol: f64) -> Result<Matrix> {
    let e = check_psd(a)?;
    let cutoff = rank_tol * e.lambda_max();
    Ok(e.apply_real(|l| if l > cutoff && l > 0.0 { l.recip() } else { 0.0 }))
}

/// `exp(scale * H)` for Hermitian `H`. Unitary when `scale` is purely imaginary.
pub fn expm_hermitian(h: &Matrix, scale: C64) -> Result<Matrix> {
    let e = eigh(h)?;
    Ok(e.apply(|l| (scale * l).exp()))
}

/// Whether `A <= B` in the semidefinite order, i.e. `lambda_min(B - A) >= -tol`.
pub fn psd_order_holds(a: &Matrix, b: &Matrix, tol: f64) -> Result<bool> {
    if a.dims() != b.dims() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    let e = eigh(&(b - a))?;
    Ok(e.lambda_min() >= -tol)
}
