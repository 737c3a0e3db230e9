//! Randomized Cholesky for Laplacians.
//!
//! Eliminating vertex `v` from a Laplacian removes its star and adds a
//! clique on its neighbors with weights `w_a w_b / W`. The sampled variant
//! replaces that clique by `deg(v)` random edges whose expected Laplacian
//! is the exact clique, so fill stays linear in the degree. The residual is
//! treated as a multigraph: sampled edges landing on an existing pair stay
//! separate edges for degree counting, so the edge count never grows.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{GraphError, Laplacian, Result};
use crate::linalg::Matrix;

/// Draws `n_samples` edges whose expected Laplacian is the clique left by
/// eliminating the center of `star` (pairs `(neighbor, weight)`).
///
/// Each draw picks an ordered pair `a != b` with probability proportional
/// to `w_a w_b` and emits `(min, max, Z / (N W))`, where `W = sum w` and
/// `Z = sum_{a<b} w_a w_b`.
pub fn clique_sample<R: Rng + ?Sized>(
    star: &[(usize, f64)],
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize, f64)>> {
    if star.len() < 2 {
        return Err(GraphError::DegenerateStar(star.len()));
    }
    if n_samples == 0 {
        return Err(GraphError::InvalidParameter("need at least one clique sample".into()));
    }
    let weights: Vec<f64> = star.iter().map(|&(_, w)| w).collect();
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(GraphError::InvalidParameter("star weights must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    let square_sum: f64 = weights.iter().map(|w| w * w).sum();
    let z = (total * total - square_sum) / 2.0;
    let edge_weight = z / (n_samples as f64 * total);
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| GraphError::InvalidParameter(format!("star weights: {e}")))?;

    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let (a, b) = loop {
            let a = dist.sample(rng);
            let b = dist.sample(rng);
            if a != b {
                break (a, b);
            }
        };
        let (x, y) = (star[a].0, star[b].0);
        out.push((x.min(y), x.max(y), edge_weight));
    }
    Ok(out)
}

/// Factor `C` with `CC*` approximating `L`, stored in elimination order.
#[derive(Clone, Debug)]
pub struct SparseCholesky {
    /// Lower triangular in the permuted basis: column `k` is the scaled
    /// column extracted when eliminating `order[k]`.
    pub c: Matrix,
    /// `order[k]` is the vertex eliminated at step `k`.
    pub order: Vec<usize>,
}

impl SparseCholesky {
    pub fn dimension(&self) -> usize {
        self.order.len()
    }

    /// `CC*` in the original vertex labels.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dimension();
        let cc = &self.c * &self.c.adjoint();
        let mut out = Matrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                out[(self.order[a], self.order[b])] = cc[(a, b)];
            }
        }
        out
    }

    /// Applies `(CC*)^+` to `r` by grounding the last eliminated vertex,
    /// solving with the leading triangular block, and removing the mean.
    pub fn apply_pseudo_inverse(&self, r: &[f64]) -> Vec<f64> {
        let n = self.dimension();
        assert_eq!(r.len(), n, "preconditioner: length mismatch");
        let m = n - 1;
        let l = |i: usize, j: usize| self.c.re(i, j);
        let b: Vec<f64> = self.order.iter().map(|&v| r[v]).collect();
        // forward: L11 y = b[..m]
        let mut y = vec![0.0; m];
        for i in 0..m {
            let s: f64 = (0..i).map(|j| l(i, j) * y[j]).sum();
            y[i] = (b[i] - s) / l(i, i);
        }
        // backward: L11* x = y
        let mut x = vec![0.0; n];
        for i in (0..m).rev() {
            let s: f64 = ((i + 1)..m).map(|j| l(j, i) * x[j]).sum();
            x[i] = (y[i] - s) / l(i, i);
        }
        let mut out = vec![0.0; n];
        for (k, &v) in self.order.iter().enumerate() {
            out[v] = x[k];
        }
        let mean = out.iter().sum::<f64>() / n as f64;
        out.iter_mut().for_each(|v| *v -= mean);
        out
    }
}

/// Eliminates the vertices of `L` in a uniformly random order.
///
/// With `exact_mode` the residual update is the exact Schur complement and
/// `CC* = L` up to roundoff. Otherwise each elimination adds
/// [`clique_sample`] with `N = deg(v)` in place of the exact clique, where
/// `deg(v)` counts parallel edges of the residual multigraph.
pub fn sparse_cholesky<R: Rng + ?Sized>(
    l: &Laplacian,
    rng: &mut R,
    exact_mode: bool,
) -> Result<SparseCholesky> {
    let n = l.dimension();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut r = l.matrix().real_parts();
    let mut c = vec![0.0; n * n];
    let mut alive = vec![true; n];
    // parallel-edge counts of the residual multigraph (sampled mode only)
    let mut mult: Vec<usize> = (0..n * n)
        .map(|ij| usize::from(ij / n != ij % n && r[ij] < 0.0))
        .collect();

    for (k, &v) in order.iter().enumerate() {
        alive[v] = false;
        let pivot = r[v * n + v];
        if k + 1 == n {
            break;
        }
        if !(pivot > 1e-12) {
            return Err(GraphError::ZeroPivot { step: k + 1, pivot });
        }
        let s = pivot.sqrt();
        let col: Vec<f64> = (0..n).map(|i| r[i * n + v] / s).collect();
        for (row, &u) in order.iter().enumerate().skip(k) {
            c[row * n + k] = col[u];
        }

        if exact_mode {
            for i in 0..n {
                for j in 0..n {
                    r[i * n + j] -= col[i] * col[j];
                }
            }
        } else {
            let star: Vec<(usize, f64)> = (0..n)
                .filter(|&u| alive[u] && r[v * n + u] < 0.0)
                .map(|u| (u, -r[v * n + u]))
                .collect();
            let degree: usize = star.iter().map(|&(u, _)| mult[v * n + u]).sum();
            for &(u, w) in &star {
                r[u * n + u] -= w;
                mult[v * n + u] = 0;
                mult[u * n + v] = 0;
            }
            if star.len() >= 2 {
                for (a, b, w) in clique_sample(&star, degree, rng)? {
                    r[a * n + a] += w;
                    r[b * n + b] += w;
                    r[a * n + b] -= w;
                    r[b * n + a] -= w;
                    mult[a * n + b] += 1;
                    mult[b * n + a] += 1;
                }
            }
        }
        for i in 0..n {
            r[i * n + v] = 0.0;
            r[v * n + i] = 0.0;
        }
    }

    Ok(SparseCholesky {
        c: Matrix::from_real(n, n, &c)?,
        order,
    })
}
