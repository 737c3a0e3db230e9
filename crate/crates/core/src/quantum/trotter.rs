use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::Serialize;

use super::{trace_distance, QuantumError, Result};
use crate::linalg::{expm_hermitian, spectral_norm, Matrix, C64};

pub fn pauli_x() -> Matrix {
    Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]])
}

pub fn pauli_y() -> Matrix {
    let mut m = Matrix::zeros(2, 2);
    m[(0, 1)] = C64::new(0.0, -1.0);
    m[(1, 0)] = C64::new(0.0, 1.0);
    m
}

pub fn pauli_z() -> Matrix {
    Matrix::from_diag(&[1.0, -1.0])
}

/// `H = sum_m H_m` with cached term norms and `L = sum_m ||H_m||`.
#[derive(Clone, Debug)]
pub struct HamiltonianSum {
    terms: Vec<Matrix>,
    norms: Vec<f64>,
    strength: f64,
}

impl HamiltonianSum {
    pub fn new(terms: Vec<Matrix>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| QuantumError::InvalidParameter("Hamiltonian needs a term".into()))?;
        let d = first.rows();
        let mut norms = Vec::with_capacity(terms.len());
        for h in &terms {
            if !h.is_square() || h.rows() != d {
                return Err(QuantumError::DimensionMismatch {
                    expected: d,
                    found: h.rows(),
                });
            }
            if h.hermitian_defect() > 1e-12 {
                return Err(QuantumError::InvalidParameter("term is not Hermitian".into()));
            }
            norms.push(spectral_norm(h)?);
        }
        let strength = norms.iter().sum();
        Ok(Self {
            terms,
            norms,
            strength,
        })
    }

    /// `sum_q (X_q + Z_q)` on `qubits` qubits, with terms ordered `X_0, Z_0, X_1, ...`.
    pub fn pauli_xz(qubits: u32) -> Result<Self> {
        if qubits == 0 || qubits > 8 {
            return Err(QuantumError::InvalidParameter(format!(
                "qubit count must lie in 1..=8, got {qubits}"
            )));
        }
        let site = |q: u32, p: &Matrix| -> Matrix {
            (0..qubits).fold(None::<Matrix>, |acc, k| {
                let f = if k == q { p.clone() } else { Matrix::identity(2) };
                Some(match acc {
                    None => f,
                    Some(a) => a.kron(&f),
                })
            })
            .unwrap()
        };
        let mut terms = Vec::new();
        for q in 0..qubits {
            terms.push(site(q, &pauli_x()));
            terms.push(site(q, &pauli_z()));
        }
        Self::new(terms)
    }

    pub fn terms(&self) -> &[Matrix] {
        &self.terms
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Interaction strength `L`.
    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn dimension(&self) -> usize {
        self.terms[0].rows()
    }

    pub fn total(&self) -> Matrix {
        self.terms[1..].iter().fold(self.terms[0].clone(), |acc, h| &acc + h)
    }

    /// `exp(-i H)`.
    pub fn target_unitary(&self) -> Result<Matrix> {
        Ok(expm_hermitian(&self.total(), C64::new(0.0, -1.0))?)
    }

    fn sampler(&self) -> Result<WeightedIndex<f64>> {
        if !(self.strength > 0.0) {
            return Err(QuantumError::ZeroInteraction);
        }
        WeightedIndex::new(&self.norms).map_err(|_| QuantumError::ZeroInteraction)
    }

    /// `exp(-i (L / ||H_j||) H_j / n)`; the identity for a zero term, which is never drawn.
    fn factor(&self, j: usize, n: usize) -> Result<Matrix> {
        if self.norms[j] == 0.0 {
            return Ok(Matrix::identity(self.dimension()));
        }
        let s = self.strength / (self.norms[j] * n as f64);
        Ok(expm_hermitian(&self.terms[j], C64::new(0.0, -s))?)
    }
}

fn check_steps(n: usize) -> Result<()> {
    if n == 0 {
        return Err(QuantumError::InvalidParameter("need at least one factor".into()));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct TrotterFactor {
    pub index: usize,
    pub y: Matrix,
}

/// Draws term `j` with probability `||H_j|| / L` and returns its scaled exponential.
pub fn trotter_factor<R: Rng + ?Sized>(h: &HamiltonianSum, n: usize, rng: &mut R) -> Result<TrotterFactor> {
    check_steps(n)?;
    let index = h.sampler()?.sample(rng);
    Ok(TrotterFactor {
        index,
        y: h.factor(index, n)?,
    })
}

/// `Q = Y_n ... Y_1` with iid factors.
pub fn random_product<R: Rng + ?Sized>(h: &HamiltonianSum, n: usize, rng: &mut R) -> Result<Matrix> {
    check_steps(n)?;
    let dist = h.sampler()?;
    // only M distinct factors exist, so exponentiate each once
    let factors: Vec<Matrix> = (0..h.terms.len()).map(|j| h.factor(j, n)).collect::<Result<_>>()?;
    let mut q = Matrix::identity(h.dimension());
    for _ in 0..n {
        q = &factors[dist.sample(rng)] * &q;
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrotterBias {
    /// `||(E Y)^n - exp(-iH)||`.
    pub bias: f64,
    /// `||E Y - exp(-iH/n)||`, at most `(L/n)^2`.
    pub per_factor_gap: f64,
    #[serde(skip)]
    pub mean_factor: Matrix,
}

fn matrix_power(a: &Matrix, mut n: usize) -> Matrix {
    let mut base = a.clone();
    let mut acc = Matrix::identity(a.rows());
    while n > 0 {
        if n & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        n >>= 1;
    }
    acc
}

/// Exact bias of the random product, with `E[Y]` formed as the finite mixture.
pub fn trotter_bias(h: &HamiltonianSum, n: usize) -> Result<TrotterBias> {
    check_steps(n)?;
    if !(h.strength > 0.0) {
        return Err(QuantumError::ZeroInteraction);
    }
    let d = h.dimension();
    let mut mean = Matrix::zeros(d, d);
    for j in 0..h.terms.len() {
        if h.norms[j] > 0.0 {
            mean = &mean + &h.factor(j, n)?.scale_real(h.norms[j] / h.strength);
        }
    }
    let step = expm_hermitian(&h.total(), C64::new(0.0, -1.0 / n as f64))?;
    let u = h.target_unitary()?;
    Ok(TrotterBias {
        bias: spectral_norm(&(&matrix_power(&mean, n) - &u))?,
        per_factor_gap: spectral_norm(&(&mean - &step))?,
        mean_factor: mean,
    })
}

/// `ceil(40 eps^-2 L^2 log(2d / delta))`, requiring `eps <= L`.
pub fn trotter_sample_count(l: f64, eps: f64, delta: f64, d: usize) -> Result<u64> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(QuantumError::ZeroInteraction);
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(QuantumError::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(QuantumError::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if d == 0 {
        return Err(QuantumError::InvalidParameter("dimension must be positive".into()));
    }
    if eps > l {
        return Err(QuantumError::HypothesisViolated { eps, l });
    }
    Ok((40.0 * l * l * (2.0 * d as f64 / delta).ln() / (eps * eps)).ceil() as u64)
}

fn unitarity_defect(q: &Matrix) -> Result<f64> {
    Ok(spectral_norm(&(&(&q.adjoint() * q) - &Matrix::identity(q.rows())))?)
}

/// `2 ||Q - U||`, an upper bound on `sup_rho ||Q rho Q* - U rho U*||_1`.
///
/// Phase-sensitive: `Q = -U` gives 4 although the channels agree.
pub fn channel_error(q: &Matrix, u: &Matrix) -> Result<f64> {
    if q.dims() != u.dims() || !q.is_square() {
        return Err(QuantumError::DimensionMismatch {
            expected: u.rows(),
            found: q.rows(),
        });
    }
    for m in [q, u] {
        let defect = unitarity_defect(m)?;
        if defect > 1e-8 {
            return Err(QuantumError::NotUnitary { defect });
        }
    }
    Ok(2.0 * spectral_norm(&(q - u))?)
}

/// `||Q rho Q* - U rho U*||_1` for one state.
pub fn channel_distance(q: &Matrix, u: &Matrix, rho: &Matrix) -> Result<f64> {
    let a = &(q * rho) * &q.adjoint();
    let b = &(u * rho) * &u.adjoint();
    trace_distance(&a.hermitian_part(), &b.hermitian_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn xz() -> HamiltonianSum {
        HamiltonianSum::new(vec![pauli_x(), pauli_z()]).unwrap()
    }

    #[test]
    fn strength_and_builtin() {
        assert!((xz().strength() - 2.0).abs() < 1e-12);
        let h = HamiltonianSum::pauli_xz(2).unwrap();
        assert_eq!(h.dimension(), 4);
        assert!((h.strength() - 4.0).abs() < 1e-12);
        assert_eq!(HamiltonianSum::pauli_xz(1).unwrap().total(), xz().total());
    }

    #[test]
    fn z_draw_scales_by_strength() {
        let h = xz();
        let mut rng = stream(1, 0);
        let n = 7;
        let want_z = expm_hermitian(&pauli_z(), C64::new(0.0, -2.0 / n as f64)).unwrap();
        for _ in 0..20 {
            let f = trotter_factor(&h, n, &mut rng).unwrap();
            if f.index == 1 {
                assert!(f.y.max_abs_diff(&want_z) < 1e-12);
            }
            assert!(unitarity_defect(&f.y).unwrap() < 1e-10);
        }
    }

    #[test]
    fn single_term_is_exact() {
        let h = HamiltonianSum::new(vec![pauli_y().scale_real(0.7)]).unwrap();
        let q = random_product(&h, 13, &mut stream(2, 0)).unwrap();
        assert!(spectral_norm(&(&q - &h.target_unitary().unwrap())).unwrap() <= 1e-9);
        assert!(trotter_bias(&h, 13).unwrap().bias < 1e-12);
    }

    #[test]
    fn bias_bounds() {
        let h = xz();
        for n in [10, 100, 1000] {
            let b = trotter_bias(&h, n).unwrap();
            let ln = 2.0 / n as f64;
            assert!(b.per_factor_gap <= ln * ln, "{n}: {}", b.per_factor_gap);
            assert!(b.bias <= 4.0 / n as f64, "{n}: {}", b.bias);
        }
    }

    #[test]
    fn sample_count_examples() {
        assert_eq!(trotter_sample_count(2.0, 0.5, 0.1, 2).unwrap(), 2361);
        assert_eq!(
            trotter_sample_count(2.0, 2.0, 0.1, 2).unwrap(),
            (40.0 * 40f64.ln()).ceil() as u64
        );
        assert!(matches!(
            trotter_sample_count(2.0, 2.5, 0.1, 2),
            Err(QuantumError::HypothesisViolated { .. })
        ));
    }

    #[test]
    fn channel_error_examples() {
        let u = xz().target_unitary().unwrap();
        assert!(channel_error(&u, &u).unwrap() < 1e-12);
        assert!((channel_error(&(-&u), &u).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(
            channel_error(&pauli_x().scale_real(2.0), &u),
            Err(QuantumError::NotUnitary { .. })
        ));
    }
}
