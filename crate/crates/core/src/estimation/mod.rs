//! Sample second-moment estimators and their error radii.
//!
//! Active subspaces: average gradient outer products of a Lipschitz
//! function and keep the leading eigenvectors. Covariance sequences: the
//! running empirical covariance of a bounded centered vector, with a radius
//! valid for every sample size at once.

mod models;

use rand::RngCore;
use thiserror::Error;

use crate::linalg::{eigh, spectral_norm, LinalgError, Matrix, C64};

pub use models::{AxisModel, LinearModel, QuadraticModel, TwoPointModel};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("gradient norm {norm} exceeds the Lipschitz constant {bound}")]
    LipschitzViolated { norm: f64, bound: f64 },
    #[error("sample norm {norm} exceeds the bound {bound}")]
    BoundViolated { norm: f64, bound: f64 },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T, E = EstimationError> = std::result::Result<T, E>;

/// A differentiable function of a random point.
pub trait GradientModel {
    fn dimension(&self) -> usize;
    /// Upper bound on `||grad f(z)||` over the support of `z`.
    fn lipschitz(&self) -> f64;
    fn sample_point(&self, rng: &mut dyn RngCore) -> Vec<f64>;
    fn gradient(&self, z: &[f64]) -> Vec<f64>;
    /// `E[grad f grad f*]` when known in closed form.
    fn analytic_sigma(&self) -> Option<Matrix> {
        None
    }
}

/// A centered random vector with `||y|| <= L` almost surely.
pub trait BoundedVectorModel {
    fn dimension(&self) -> usize;
    fn bound(&self) -> f64;
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64>;
    fn analytic_sigma(&self) -> Matrix;
}

// allow 1e-12 relative slack for roundoff in norms of sampled vectors
fn check_norm(v: &[f64], bound: f64) -> Option<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > bound * (1.0 + 1e-12)).then_some(n)
}

fn rank_one_update(acc: &mut [f64], v: &[f64]) {
    let d = v.len();
    for i in 0..d {
        for j in 0..d {
            acc[i * d + j] += v[i] * v[j];
        }
    }
}

/// `(1/n) sum_k grad f(z_k) grad f(z_k)*`.
pub fn empirical_sensitivity<M: GradientModel + ?Sized>(
    model: &M,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<Matrix> {
    if n == 0 {
        return Err(EstimationError::InvalidParameter("need at least one sample".into()));
    }
    let d = model.dimension();
    let bound = model.lipschitz();
    let mut acc = vec![0.0; d * d];
    for _ in 0..n {
        let z = model.sample_point(rng);
        let g = model.gradient(&z);
        if let Some(norm) = check_norm(&g, bound) {
            return Err(EstimationError::LipschitzViolated { norm, bound });
        }
        rank_one_update(&mut acc, &g);
    }
    Ok(Matrix::from_real_fn(d, d, |i, j| acc[i * d + j] / n as f64))
}

/// `beta_n = L^2 log(2d) / (||Sigma|| n)`.
pub fn sensitivity_beta(l: f64, norm_sigma: f64, d: usize, n: usize) -> f64 {
    assert!(norm_sigma > 0.0 && n > 0 && d > 0, "need ||Sigma|| > 0, d >= 1, n >= 1");
    l * l * (2.0 * d as f64).ln() / (norm_sigma * n as f64)
}

/// Bound `sqrt(2 beta_n) + beta_n / 3` on `E ||Sigma_hat_n - Sigma|| / ||Sigma||`.
pub fn active_subspace_error_bound(l: f64, norm_sigma: f64, d: usize, n: usize) -> f64 {
    let b = sensitivity_beta(l, norm_sigma, d, n);
    (2.0 * b).sqrt() + b / 3.0
}

/// `ceil(4 eps^-2 L^2 log(2d) / ||Sigma||)`; at that `n` the bound is at most `eps` for `eps <= 1`.
pub fn active_subspace_sample_count(l: f64, norm_sigma: f64, d: usize, eps: f64) -> u64 {
    assert!(norm_sigma > 0.0 && d > 0 && eps > 0.0, "need ||Sigma|| > 0, d >= 1, eps > 0");
    (4.0 * l * l * (2.0 * d as f64).ln() / (eps * eps * norm_sigma)).ceil() as u64
}

/// The `k` leading eigenvectors of `sigma_hat` as orthonormal columns.
pub fn active_subspace(sigma_hat: &Matrix, k: usize) -> Result<Matrix> {
    let d = sigma_hat.rows();
    if k == 0 || k > d {
        return Err(EstimationError::InvalidParameter(format!("k = {k} outside 1..={d}")));
    }
    let e = eigh(sigma_hat)?;
    let v = e.eigenvectors();
    // eigh sorts ascending
    Ok(Matrix::from_fn(d, k, |i, j| v[(i, d - 1 - j)]))
}

/// Running empirical covariances `Sigma_hat_1, ..., Sigma_hat_N` along one path.
pub fn covariance_sequence<M: BoundedVectorModel + ?Sized>(
    model: &M,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<Matrix>> {
    if horizon == 0 {
        return Err(EstimationError::InvalidParameter("horizon must be positive".into()));
    }
    let d = model.dimension();
    let bound = model.bound();
    let mut acc = vec![0.0; d * d];
    let mut out = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let y = model.sample(rng);
        if let Some(norm) = check_norm(&y, bound) {
            return Err(EstimationError::BoundViolated { norm, bound });
        }
        rank_one_update(&mut acc, &y);
        let data = acc.iter().map(|&x| C64::new(x / n as f64, 0.0)).collect();
        out.push(Matrix::from_complex(d, d, data)?);
    }
    Ok(out)
}

/// `beta_n = (L^2 / ||Sigma||) (log(2d/delta) + log log(e n)) / n`.
pub fn covariance_beta(l: f64, norm_sigma: f64, d: usize, delta: f64, n: usize) -> f64 {
    assert!(norm_sigma > 0.0 && n > 0 && d > 0, "need ||Sigma|| > 0, d >= 1, n >= 1");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    let n = n as f64;
    let loglog = (1.0 + n.ln()).ln();
    l * l / norm_sigma * ((2.0 * d as f64 / delta).ln() + loglog) / n
}

/// Relative radius `sqrt(8 beta_n) + 2 beta_n / 3`, valid for all `n` simultaneously
/// with probability `1 - delta`.
pub fn covariance_confidence_radius(l: f64, norm_sigma: f64, d: usize, delta: f64, n: usize) -> f64 {
    let b = covariance_beta(l, norm_sigma, d, delta, n);
    (8.0 * b).sqrt() + 2.0 * b / 3.0
}

/// `||Sigma_hat_n - Sigma|| / ||Sigma||` for each `n`.
pub fn relative_deviations(path: &[Matrix], sigma: &Matrix) -> Result<Vec<f64>> {
    let s = spectral_norm(sigma)?;
    if !(s > 0.0) {
        return Err(EstimationError::InvalidParameter("Sigma must be nonzero".into()));
    }
    path.iter()
        .map(|m| Ok(spectral_norm(&(m - sigma))? / s))
        .collect()
}

/// Whether the path stays inside the radii at every `n`.
pub fn coverage_check(path: &[Matrix], sigma: &Matrix, radii: &[f64]) -> Result<bool> {
    if path.len() != radii.len() {
        return Err(EstimationError::LengthMismatch(path.len(), radii.len()));
    }
    Ok(relative_deviations(path, sigma)?
        .iter()
        .zip(radii)
        .all(|(dev, r)| dev <= r))
}
