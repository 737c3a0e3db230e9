//! Cyclic Jacobi eigendecomposition for Hermitian matrices.
//!
//! Each rotation annihilates one off-diagonal pair `(p, q)`. For complex
//! input the pair is first rotated onto the real axis by a diagonal phase,
//! after which the classical real rotation applies. Real input takes a
//! separate monomorphized path that never touches imaginary parts.

use std::ops::{Add, Mul, Sub};

use super::{LinalgError, Matrix, Result, C64, MAX_DENSE_DIM};

/// Sweep budget before reporting [`LinalgError::NoConvergence`].
pub const MAX_SWEEPS: usize = 64;

/// Converged when the off-diagonal Frobenius mass is at most this times `||A||_F`.
const OFF_DIAGONAL_TOL: f64 = 1e-14;

/// Eigen-decomposition `A = V diag(lambda) V*` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
}

impl HermitianEigen {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary matrix whose `k`-th column pairs with `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// `V diag(f(lambda)) V*`.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> Matrix {
        let n = self.dimension();
        let v = &self.eigenvectors;
        let weights: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let scaled = Matrix::from_fn(n, n, |i, k| v[(i, k)] * weights[k]);
        &scaled * &v.adjoint()
    }

    /// Same as [`apply`](Self::apply) for real-valued spectral functions.
    pub fn apply_real(&self, f: impl Fn(f64) -> f64) -> Matrix {
        self.apply(|l| C64::new(f(l), 0.0))
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// The input must satisfy `||A - A*||_max <= 1e-12 (1 + ||A||_max)`; it is
/// symmetrized before iterating.
pub fn eigh(a: &Matrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare(a.rows(), a.cols()));
    }
    let defect = a.hermitian_defect();
    if defect > 1e-12 * (1.0 + a.max_abs()) {
        return Err(LinalgError::NotHermitian { defect });
    }
    eigh_unchecked(a)
}

/// Jacobi on the Hermitian part of `a`, skipping the symmetry check.
pub(crate) fn eigh_unchecked(a: &Matrix) -> Result<HermitianEigen> {
    let n = a.rows();
    if n > MAX_DENSE_DIM {
        return Err(LinalgError::TooLarge(n));
    }
    let sym = a.hermitian_part();
    let (values, vectors) = if sym.is_real() {
        let mut work: Vec<f64> = sym.real_parts();
        let (vals, vecs) = jacobi(&mut work, n)?;
        (vals, vecs.into_iter().map(|x| C64::new(x, 0.0)).collect::<Vec<_>>())
    } else {
        let mut work: Vec<C64> = sym.as_slice().to_vec();
        jacobi(&mut work, n)?
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, k| vectors[i * n + order[k]]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    const ZERO: Self;
    const ONE: Self;
    fn real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn modulus(self) -> f64;
    fn modulus_sqr(self) -> f64;
    fn re(self) -> f64;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn modulus_sqr(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
}

impl Scalar for C64 {
    const ZERO: Self = C64::new(0.0, 0.0);
    const ONE: Self = C64::new(1.0, 0.0);
    fn real(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        C64::conj(&self)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn modulus_sqr(self) -> f64 {
        self.norm_sqr()
    }
    fn re(self) -> f64 {
        self.re
    }
}

/// Diagonalizes the Hermitian `n x n` row-major array `a` in place.
/// Returns the (unsorted) diagonal and the accumulated rotations.
fn jacobi<T: Scalar>(a: &mut [T], n: usize) -> Result<(Vec<f64>, Vec<T>)> {
    let mut v = vec![T::ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = T::ONE;
    }
    let total: f64 = a.iter().map(|x| x.modulus_sqr()).sum::<f64>().sqrt();
    let target = OFF_DIAGONAL_TOL * total;

    let off_norm = |a: &[T]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += 2.0 * a[p * n + q].modulus_sqr();
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        if off_norm(a) <= target {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(a, &mut v, n, p, q);
            }
        }
    }
    let diag = (0..n).map(|i| a[i * n + i].re()).collect();
    Ok((diag, v))
}

fn rotate<T: Scalar>(a: &mut [T], v: &mut [T], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let r = apq.modulus();
    if r == 0.0 {
        return;
    }
    let app = a[p * n + p].re();
    let aqq = a[q * n + q].re();
    // Negligible against both diagonal entries: drop it outright.
    if r <= 1e-3 * f64::EPSILON * (app.abs() + aqq.abs()) {
        a[p * n + q] = T::ZERO;
        a[q * n + p] = T::ZERO;
        return;
    }

    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // phase carrying a_pq onto the positive real axis
    let w = (apq * T::real(1.0 / r)).conj();

    let (jpp, jpq, jqp, jqq) = (T::real(c), T::real(s), T::real(-s) * w, T::real(c) * w);

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        let new_kp = akp * jpp + akq * jqp;
        let new_kq = akp * jpq + akq * jqq;
        a[k * n + p] = new_kp;
        a[k * n + q] = new_kq;
        a[p * n + k] = new_kp.conj();
        a[q * n + k] = new_kq.conj();
    }
    a[p * n + p] = T::real(app - t * r);
    a[q * n + q] = T::real(aqq + t * r);
    a[p * n + q] = T::ZERO;
    a[q * n + p] = T::ZERO;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * jpp + vkq * jqp;
        v[k * n + q] = vkp * jpq + vkq * jqq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruction_error(a: &Matrix, e: &HermitianEigen) -> f64 {
        (&e.apply_real(|l| l) - a).frobenius()
    }

    fn unitarity_error(v: &Matrix) -> f64 {
        let n = v.rows();
        (&(&v.adjoint() * v) - &Matrix::identity(n)).max_abs()
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let e = eigh(&Matrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.eigenvalues(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn swap_matrix() {
        let e = eigh(&Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert!((e.eigenvalues()[0] + 1.0).abs() < 1e-15);
        assert!((e.eigenvalues()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let a = Matrix::from_fn(5, 5, |i, j| {
            let (x, y) = ((i * 7 + j * 3) as f64, (i * j) as f64);
            if i == j {
                C64::new(x.sin() * 3.0, 0.0)
            } else if i < j {
                C64::new(x.cos(), (y + 1.0).sin())
            } else {
                let (x, y) = ((j * 7 + i * 3) as f64, (i * j) as f64);
                C64::new(x.cos(), -(y + 1.0).sin())
            }
        });
        assert_eq!(a.hermitian_defect(), 0.0);
        let e = eigh(&a).unwrap();
        assert!(reconstruction_error(&a, &e) <= 1e-10 * (1.0 + a.frobenius()));
        assert!(unitarity_error(e.eigenvectors()) <= 1e-10);
        assert!(e.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        assert!(matches!(eigh(&a), Err(LinalgError::NotHermitian { .. })));
        let r = Matrix::zeros(2, 3);
        assert!(matches!(eigh(&r), Err(LinalgError::NotSquare(2, 3))));
    }

    #[test]
    fn zero_matrix_converges_immediately() {
        let e = eigh(&Matrix::zeros(4, 4)).unwrap();
        assert!(e.eigenvalues().iter().all(|&l| l == 0.0));
        assert_eq!(unitarity_error(e.eigenvectors()), 0.0);
    }
}
