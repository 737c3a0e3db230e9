use serde::Serialize;

use super::{GraphError, Laplacian, Result, SparseCholesky};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PcgSolution {
    /// Iterate with zero mean.
    pub u: Vec<f64>,
    pub iterations: usize,
    /// `||L u - f|| / ||f||` for the returned `u`.
    pub relative_residual: f64,
    /// Relative residual history for `k = 0..=iterations`.
    pub residuals: Vec<f64>,
    /// Steps at which the residual grew; CG does not promise monotone residuals.
    pub residual_increases: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Solves `L u = f` on the complement of the constants by preconditioned CG.
///
/// `f` must sum to zero (within `1e-10 ||f||`). The preconditioner is
/// `(CC*)^+` from `precond`, or the identity. Iterates are re-centered every
/// step. Stops when the relative residual reaches `tol`; after `maxit`
/// steps returns [`GraphError::MaxIterations`] carrying the best iterate.
pub fn pcg_solve(
    l: &Laplacian,
    precond: Option<&SparseCholesky>,
    f: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<PcgSolution> {
    let n = l.dimension();
    if f.len() != n {
        return Err(GraphError::DimensionMismatch {
            expected: n,
            found: f.len(),
        });
    }
    if let Some(p) = precond {
        if p.dimension() != n {
            return Err(GraphError::DimensionMismatch {
                expected: n,
                found: p.dimension(),
            });
        }
    }
    let fnorm = dot(f, f).sqrt();
    let sum: f64 = f.iter().sum();
    if sum.abs() > 1e-10 * fnorm {
        return Err(GraphError::NotBalanced { sum });
    }
    if fnorm == 0.0 {
        return Ok(PcgSolution {
            u: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            residuals: vec![0.0],
            residual_increases: 0,
        });
    }

    let apply_l = |x: &[f64]| l.matrix().mat_vec_real(x);
    let apply_m = |r: &[f64]| -> Vec<f64> {
        match precond {
            Some(p) => p.apply_pseudo_inverse(r),
            None => {
                let mut z = r.to_vec();
                center(&mut z);
                z
            }
        }
    };
    let true_residual = |u: &[f64]| -> f64 {
        let lu = apply_l(u);
        lu.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / fnorm
    };

    let mut u = vec![0.0; n];
    let mut r = f.to_vec();
    center(&mut r);
    let mut z = apply_m(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut residuals = vec![true_residual(&u)];
    let mut best = (residuals[0], u.clone());
    let mut increases = 0;

    for it in 1..=maxit {
        let ap = apply_l(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for k in 0..n {
            u[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        center(&mut u);
        center(&mut r);

        let res = true_residual(&u);
        if res > *residuals.last().unwrap() {
            increases += 1;
        }
        residuals.push(res);
        if res < best.0 {
            best = (res, u.clone());
        }
        if res <= tol {
            return Ok(PcgSolution {
                u,
                iterations: it,
                relative_residual: res,
                residuals,
                residual_increases: increases,
            });
        }

        z = apply_m(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }

    Err(GraphError::MaxIterations(Box::new(PcgSolution {
        u: best.1,
        iterations: residuals.len() - 1,
        relative_residual: best.0,
        residuals,
        residual_increases: increases,
    })))
}

/// `sqrt((u - v)* L (u - v))`.
pub fn energy_seminorm(l: &Laplacian, u: &[f64], v: &[f64]) -> f64 {
    let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    dot(&diff, &l.matrix().mat_vec_real(&diff)).max(0.0).sqrt()
}
