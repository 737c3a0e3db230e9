//! Built-in sampling models with known second moments.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{BoundedVectorModel, EstimationError, GradientModel, Result};
use crate::linalg::{spectral_norm, Matrix};

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sphere_point(d: usize, radius: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm(&g);
        if n > 0.0 {
            return g.into_iter().map(|x| radius * x / n).collect();
        }
    }
}

/// `f(z) = z* b` with `z` standard Gaussian. The gradient is always `b`.
#[derive(Clone, Debug)]
pub struct LinearModel {
    b: Vec<f64>,
}

impl LinearModel {
    pub fn new(b: Vec<f64>) -> Result<Self> {
        if b.is_empty() || b.iter().any(|x| !x.is_finite()) {
            return Err(EstimationError::InvalidParameter("b must be a finite nonempty vector".into()));
        }
        Ok(Self { b })
    }
}

impl GradientModel for LinearModel {
    fn dimension(&self) -> usize {
        self.b.len()
    }
    fn lipschitz(&self) -> f64 {
        norm(&self.b)
    }
    fn sample_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.b.len()).map(|_| rng.sample(StandardNormal)).collect()
    }
    fn gradient(&self, _z: &[f64]) -> Vec<f64> {
        self.b.clone()
    }
    fn analytic_sigma(&self) -> Option<Matrix> {
        Some(Matrix::outer_real(&self.b, &self.b))
    }
}

/// `f(z) = z* Q z / 2` with `z` uniform on the sphere of radius `R`.
///
/// `grad f = Q z`, `L = R ||Q||`, and since `E[z z*] = (R^2/d) I` the
/// sensitivity matrix is `(R^2/d) Q^2`.
#[derive(Clone, Debug)]
pub struct QuadraticModel {
    q: Matrix,
    radius: f64,
    lipschitz: f64,
}

impl QuadraticModel {
    pub fn new(q: Matrix, radius: f64) -> Result<Self> {
        if !q.is_real() || !q.is_square() || q.hermitian_defect() > 0.0 {
            return Err(EstimationError::InvalidParameter("Q must be real symmetric".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(EstimationError::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        let lipschitz = radius * spectral_norm(&q)?;
        Ok(Self { q, radius, lipschitz })
    }

    /// `Q = H diag(1, 1/2, 1/4, ...) H` with `H` the Householder reflection
    /// through `(1, ..., 1)`, on the unit sphere.
    pub fn builtin(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(EstimationError::InvalidParameter("dimension must be positive".into()));
        }
        let h = Matrix::from_real_fn(d, d, |i, j| f64::from(u8::from(i == j)) - 2.0 / d as f64);
        let diag = Matrix::from_diag(&(0..d).map(|i| 0.5f64.powi(i as i32)).collect::<Vec<_>>());
        let q = &(&h * &diag) * &h;
        // the product is symmetric up to roundoff; make it exact
        let q = Matrix::from_real_fn(d, d, |i, j| 0.5 * (q.re(i, j) + q.re(j, i)));
        Self::new(q, 1.0)
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }
}

impl GradientModel for QuadraticModel {
    fn dimension(&self) -> usize {
        self.q.rows()
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn sample_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        sphere_point(self.q.rows(), self.radius, rng)
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        self.q.mat_vec_real(z)
    }
    fn analytic_sigma(&self) -> Option<Matrix> {
        let d = self.q.rows() as f64;
        Some((&self.q * &self.q).scale_real(self.radius * self.radius / d))
    }
}

/// `y` uniform over `{+-L e_i}`; `Sigma = (L^2/d) I`.
#[derive(Clone, Debug)]
pub struct AxisModel {
    d: usize,
    l: f64,
}

impl AxisModel {
    pub fn new(d: usize, l: f64) -> Result<Self> {
        if d == 0 || !(l > 0.0 && l.is_finite()) {
            return Err(EstimationError::InvalidParameter(format!("need d >= 1 and L > 0, got d={d}, L={l}")));
        }
        Ok(Self { d, l })
    }
}

impl BoundedVectorModel for AxisModel {
    fn dimension(&self) -> usize {
        self.d
    }
    fn bound(&self) -> f64 {
        self.l
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let i = rng.random_range(0..self.d);
        let s = if rng.random::<bool>() { self.l } else { -self.l };
        let mut y = vec![0.0; self.d];
        y[i] = s;
        y
    }
    fn analytic_sigma(&self) -> Matrix {
        Matrix::identity(self.d).scale_real(self.l * self.l / self.d as f64)
    }
}

/// `y = +-y0` with equal probability; `Sigma = y0 y0*` and every
/// empirical covariance equals it.
#[derive(Clone, Debug)]
pub struct TwoPointModel {
    y0: Vec<f64>,
}

impl TwoPointModel {
    pub fn new(y0: Vec<f64>) -> Result<Self> {
        if y0.is_empty() || y0.iter().any(|x| !x.is_finite()) || norm(&y0) == 0.0 {
            return Err(EstimationError::InvalidParameter("y0 must be finite and nonzero".into()));
        }
        Ok(Self { y0 })
    }
}

impl BoundedVectorModel for TwoPointModel {
    fn dimension(&self) -> usize {
        self.y0.len()
    }
    fn bound(&self) -> f64 {
        norm(&self.y0)
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        if rng.random::<bool>() {
            self.y0.clone()
        } else {
            self.y0.iter().map(|x| -x).collect()
        }
    }
    fn analytic_sigma(&self) -> Matrix {
        Matrix::outer_real(&self.y0, &self.y0)
    }
}
