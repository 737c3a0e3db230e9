use crate::linalg::{eigh, spectral_norm, LinalgError, Matrix, MAX_DENSE_DIM};

use super::{ConcentrationError, Result};

#[derive(Clone, Debug)]
enum Model {
    /// `Z = sum_k g_k M_k` with iid standardized scalar coefficients.
    Series(Vec<Matrix>),
    /// Real `d1 x d2` matrix with iid standard entries.
    Ginibre,
}

/// Second-order statistics of a centered random matrix, as the quadratic
/// form `A -> Var[<Z, A>]` with `<B, A> = Re Tr(B* A)`.
#[derive(Clone, Debug)]
pub struct VarianceFunction {
    d1: usize,
    d2: usize,
    model: Model,
    weak_variance: f64,
}

impl VarianceFunction {
    /// Series `sum_k g_k M_k`; `weak_variance` is `sup Var[<Z, A>]` over the
    /// trace-norm unit ball, supplied by the caller.
    pub fn series(coefficients: Vec<Matrix>, weak_variance: f64) -> Result<Self> {
        let first = coefficients.first().ok_or(ConcentrationError::EmptyInput)?;
        let (d1, d2) = first.dims();
        if coefficients.iter().any(|m| m.dims() != (d1, d2)) {
            return Err(ConcentrationError::DimensionMismatch);
        }
        if !(weak_variance >= 0.0) {
            return Err(ConcentrationError::InvalidStats(
                "weak variance must be nonnegative".into(),
            ));
        }
        Ok(Self {
            d1,
            d2,
            model: Model::Series(coefficients),
            weak_variance,
        })
    }

    /// Real Ginibre matrix. `Var[<G, A>] = ||Re A||_F^2`, so the weak variance is 1.
    pub fn ginibre(d1: usize, d2: usize) -> Self {
        Self {
            d1,
            d2,
            model: Model::Ginibre,
            weak_variance: 1.0,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    pub fn evaluate(&self, a: &Matrix) -> Result<f64> {
        if a.dims() != (self.d1, self.d2) {
            return Err(ConcentrationError::DimensionMismatch);
        }
        Ok(match &self.model {
            Model::Series(ms) => ms.iter().map(|m| real_inner(m, a).powi(2)).sum(),
            Model::Ginibre => a.as_slice().iter().map(|z| z.re * z.re).sum(),
        })
    }

    /// `max(||E ZZ*||, ||E Z*Z||)`.
    pub fn matrix_variance(&self) -> Result<f64> {
        match &self.model {
            Model::Series(ms) => {
                let mut left = Matrix::zeros(self.d1, self.d1);
                let mut right = Matrix::zeros(self.d2, self.d2);
                for m in ms {
                    left = &left + &(m * &m.adjoint());
                    right = &right + &(&m.adjoint() * m);
                }
                Ok(spectral_norm(&left)?.max(spectral_norm(&right)?))
            }
            Model::Ginibre => Ok(self.d1.max(self.d2) as f64),
        }
    }

    pub fn weak_variance(&self) -> f64 {
        self.weak_variance
    }

    /// Twice the largest eigenvalue of the form on the Frobenius unit ball,
    /// i.e. `2 lambda_max` of the Gram matrix of the coefficients.
    pub fn interaction_energy(&self) -> Result<f64> {
        let ms = match &self.model {
            Model::Series(ms) => ms,
            Model::Ginibre => return Ok(2.0),
        };
        let k = ms.len();
        if k > MAX_DENSE_DIM {
            return Err(LinalgError::TooLarge(k).into());
        }
        let gram = Matrix::from_real_fn(k, k, |i, j| real_inner(&ms[i], &ms[j]));
        Ok(2.0 * eigh(&gram)?.lambda_max().max(0.0))
    }
}

fn real_inner(b: &Matrix, a: &Matrix) -> f64 {
    b.as_slice()
        .iter()
        .zip(a.as_slice())
        .map(|(x, y)| (x.conj() * y).re)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    fn unit(d: usize, i: usize, j: usize) -> Matrix {
        Matrix::from_real_fn(d, d, |a, b| if (a, b) == (i, j) { 1.0 } else { 0.0 })
    }

    #[test]
    fn series_matches_ginibre_statistics() {
        let d = 4;
        let coeffs: Vec<Matrix> = (0..d * d).map(|k| unit(d, k / d, k % d)).collect();
        let s = VarianceFunction::series(coeffs, 1.0).unwrap();
        let g = VarianceFunction::ginibre(d, d);
        assert!((s.matrix_variance().unwrap() - d as f64).abs() < 1e-12);
        assert_eq!(g.matrix_variance().unwrap(), d as f64);
        assert!((s.interaction_energy().unwrap() - 2.0).abs() < 1e-12);
        let a = Matrix::from_fn(d, d, |i, j| C64::new((i + 2 * j) as f64 - 3.0, 1.0));
        assert!((s.evaluate(&a).unwrap() - g.evaluate(&a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn evaluation_is_quadratic_and_nonnegative() {
        let coeffs = vec![
            Matrix::from_rows(&[[1.0, 2.0], [0.0, -1.0]]),
            Matrix::from_fn(2, 2, |i, j| C64::new(0.0, (i + j) as f64)),
        ];
        let f = VarianceFunction::series(coeffs, 1.0).unwrap();
        let a = Matrix::from_fn(2, 2, |i, j| C64::new(i as f64 + 0.5, j as f64 - 0.25));
        let base = f.evaluate(&a).unwrap();
        assert!(base >= 0.0);
        let scaled = f.evaluate(&a.scale_real(-3.0)).unwrap();
        assert!((scaled - 9.0 * base).abs() <= 1e-9 * scaled.abs());
    }
}
