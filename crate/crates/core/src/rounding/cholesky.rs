//! Cholesky factorization with a stochastically rounded residual update.
//!
//! Step `k` extracts `c_k = R(:, k) / sqrt(R(k, k))` exactly, then forms
//! `R_k = sr(R_{k-1} - c_k c_k*)`. The rounding error `Y_k` of each step is
//! a martingale difference, and `CC* - A = sum_k Y_k`.

use rand::Rng;
use serde::Serialize;

use super::{FloatSystem, Result, RoundingError};
use crate::concentration::{record_trace, MartingaleTrace};
use crate::linalg::{eigh, spectral_norm, Matrix};
use crate::rng::stream;

/// Runtime checks of the residual conditions the error analysis assumes.
/// A flagged run still completes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SrFlags {
    pub residual_not_psd: bool,
    pub residual_norm_exceeded: bool,
    pub diagonal_increased: bool,
}

impl SrFlags {
    pub fn any(&self) -> bool {
        self.residual_not_psd || self.residual_norm_exceeded || self.diagonal_increased
    }
}

#[derive(Clone, Debug)]
pub struct SrCholesky {
    /// Lower-triangular factor.
    pub c: Matrix,
    /// `CC* - A`.
    pub error: Matrix,
    /// Rounding errors `Y_k` with `V_k = 2 u^2 k ||A||`.
    pub trace: MartingaleTrace,
    pub flags: SrFlags,
    pub norm_a: f64,
}

fn validate(sys: &FloatSystem, a: &Matrix) -> Result<()> {
    if !a.is_real() {
        return Err(RoundingError::NotReal);
    }
    if !a.is_square() || a.hermitian_defect() > 0.0 {
        return Err(RoundingError::NotSymmetric);
    }
    for i in 0..a.rows() {
        let v = a.re(i, i);
        if (v - 1.0).abs() > 1e-12 {
            return Err(RoundingError::NotUnitDiagonal { index: i, value: v });
        }
        for j in 0..a.cols() {
            if !sys.contains(a.re(i, j)) {
                return Err(RoundingError::NotRepresentable(i, j, a.re(i, j)));
            }
        }
    }
    if eigh(a)?.lambda_min() <= 0.0 {
        return Err(RoundingError::NotPositiveDefinite);
    }
    Ok(())
}

/// Factors `A = CC*` with stochastic rounding of each residual update.
///
/// `A` must be real symmetric positive definite with unit diagonal and
/// entries representable in `sys`. Entry `(i, j)` and `(j, i)` of each
/// update share one draw; draws run over the trailing block in row-major
/// upper-triangular order.
pub fn sr_cholesky<R: Rng + ?Sized>(
    sys: &FloatSystem,
    a: &Matrix,
    rng: &mut R,
) -> Result<SrCholesky> {
    validate(sys, a)?;
    let d = a.rows();
    let norm_a = spectral_norm(a)?;
    let u = sys.unit_roundoff();

    let mut r = a.real_parts();
    let mut c = vec![0.0; d * d];
    let mut increments = Vec::with_capacity(d);
    let mut flags = SrFlags::default();
    let mut max_pre = 1.0_f64;

    for k in 0..d {
        let pivot = r[k * d + k];
        if !(pivot > 0.0) {
            return Err(RoundingError::BreakdownNonpositivePivot { step: k + 1, pivot });
        }
        let s = pivot.sqrt();
        let col: Vec<f64> = (0..d).map(|i| if i < k { 0.0 } else { r[i * d + k] / s }).collect();
        for i in k..d {
            c[i * d + k] = col[i];
        }

        // exact-arithmetic update; row and column k vanish identically
        let mut pre = vec![0.0; d * d];
        for i in (k + 1)..d {
            for j in (k + 1)..d {
                pre[i * d + j] = r[i * d + j] - col[i] * col[j];
            }
        }
        let mut next = pre.clone();
        for i in (k + 1)..d {
            for j in i..d {
                let v = sys.round_stochastic(pre[i * d + j], rng);
                next[i * d + j] = v;
                next[j * d + i] = v;
            }
        }
        max_pre = pre.iter().fold(max_pre, |m, x| m.max(x.abs()));
        if (0..d).any(|i| next[i * d + i] > r[i * d + i]) {
            flags.diagonal_increased = true;
        }

        let y = Matrix::from_real_fn(d, d, |i, j| next[i * d + j] - pre[i * d + j]);
        increments.push(y);
        r = next;

        if k + 1 < d {
            let rk = Matrix::from_real(d, d, &r)?;
            let e = eigh(&rk)?;
            if e.lambda_min() < -1e-12 {
                flags.residual_not_psd = true;
            }
            if e.lambda_max().abs().max(e.lambda_min().abs()) > 2.0 * norm_a {
                flags.residual_norm_exceeded = true;
            }
        }
    }

    let c = Matrix::from_real(d, d, &c)?;
    let error = &(&c * &c.adjoint()) - a;
    // |Y_k(i, j)| <= u |pre(i, j)|, so ||Y_k|| <= d u max|pre|
    let bound = u * d as f64 * max_pre;
    let trace = record_trace(increments, bound, |k| 2.0 * u * u * k as f64 * norm_a)?;
    Ok(SrCholesky {
        c,
        error,
        trace,
        flags,
        norm_a,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SrCholeskyBound {
    /// `u (2 sqrt(d ||A|| t) + t / 3)`.
    pub threshold: f64,
    /// `2 d e^{-t}`.
    pub prob_bound: f64,
}

pub fn sr_cholesky_bound(d: usize, norm_a: f64, u: f64, t: f64) -> SrCholeskyBound {
    SrCholeskyBound {
        threshold: u * (2.0 * (d as f64 * norm_a * t).sqrt() + t / 3.0),
        prob_bound: 2.0 * d as f64 * (-t).exp(),
    }
}

/// A well-conditioned `d x d` correlation matrix with entries in `sys`,
/// reproducible from `seed`.
///
/// Normalizes the Gram matrix of `d` random vectors in `R^{2d}` (uniform
/// entries on `[-1, 1]`) to unit diagonal, then rounds the off-diagonal
/// entries to nearest.
pub fn correlation_fixture(d: usize, sys: &FloatSystem, seed: u64) -> Result<Matrix> {
    let mut rng = stream(seed, 0);
    let n = 2 * d;
    let x: Vec<f64> = (0..d * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let gram = |i: usize, j: usize| -> f64 {
        (0..n).map(|k| x[i * n + k] * x[j * n + k]).sum()
    };
    let diag: Vec<f64> = (0..d).map(|i| gram(i, i).sqrt()).collect();
    let a = Matrix::from_real_fn(d, d, |i, j| {
        if i == j {
            1.0
        } else {
            let (p, q) = (i.min(j), i.max(j));
            sys.round_nearest(gram(p, q) / (diag[p] * diag[q]))
        }
    });
    if eigh(&a)?.lambda_min() <= 0.0 {
        return Err(RoundingError::NotPositiveDefinite);
    }
    Ok(a)
}
