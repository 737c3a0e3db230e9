//! Density matrices, 2-design tomography, and random product formulas.
//!
//! States live in [`DensityMatrix`]. A [`MeasurementDesign`] holds the unit
//! vectors `u_j` of a rank-one measurement with effects `(d/m) u_j u_j*`;
//! the single-shot estimator `(d+1) u_J u_J* - I` is unbiased for the state
//! when the design reproduces second moments. [`HamiltonianSum`] and the
//! functions in `trotter` approximate `exp(-iH)` by products of randomly
//! chosen single-term exponentials.

mod design;
mod trotter;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{eigh, LinalgError, Matrix, C64};

pub use design::{
    born_probabilities, born_sample, builtin_design, design_from_text, design_to_text,
    estimator_mean, projected_sample_count, read_design, reconstruction_defect,
    single_shot_estimator, tomography_estimate, tomography_sample_count, tomography_tail_bound,
    validate_design, write_design, MeasurementDesign, Tomography,
};
pub use trotter::{
    channel_distance, channel_error, pauli_x, pauli_y, pauli_z, random_product, trotter_bias,
    trotter_factor, trotter_sample_count, HamiltonianSum, TrotterBias, TrotterFactor,
};

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("invalid measurement design: {0}")]
    InvalidDesign(String),
    #[error("unknown built-in design {0:?}")]
    UnknownDesign(String),
    #[error("Born probabilities are not a distribution (sum {sum}, min {min})")]
    BadDistribution { sum: f64, min: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Hamiltonian has zero interaction strength")]
    ZeroInteraction,
    #[error("accuracy eps = {eps} exceeds the interaction strength L = {l}")]
    HypothesisViolated { eps: f64, l: f64 },
    #[error("matrix is not unitary (||Q*Q - I|| = {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T, E = QuantumError> = std::result::Result<T, E>;

/// Hermitian PSD matrix with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: Matrix,
}

impl DensityMatrix {
    /// Checks Hermitian within `1e-12`, `lambda_min >= -1e-10` and
    /// `|Tr - 1| <= 1e-10`.
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(QuantumError::NotDensity(format!(
                "{}x{} is not square",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let defect = matrix.hermitian_defect();
        if defect > 1e-12 {
            return Err(QuantumError::NotDensity(format!("Hermitian defect {defect:e}")));
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(QuantumError::NotDensity(format!("trace {tr}")));
        }
        let lmin = eigh(&matrix)?.lambda_min();
        if lmin < -1e-10 {
            return Err(QuantumError::NotDensity(format!("lambda_min {lmin:e}")));
        }
        Ok(Self { matrix })
    }

    /// `I / d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: Matrix::identity(d).scale_real(1.0 / d as f64),
        }
    }

    /// `psi psi* / ||psi||^2`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let n2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(n2 > 0.0 && n2.is_finite()) {
            return Err(QuantumError::NotDensity("zero or non-finite state vector".into()));
        }
        let m = Matrix::outer(psi, psi).scale_real(1.0 / n2);
        Ok(Self {
            matrix: m.hermitian_part(),
        })
    }

    /// The pure state `e_k e_k*` in dimension `d`.
    pub fn basis(d: usize, k: usize) -> Self {
        assert!(k < d, "basis index {k} out of range for dimension {d}");
        let mut m = Matrix::zeros(d, d);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self { matrix: m }
    }

    /// Pure state from a standard complex Gaussian vector, so uniform on the sphere.
    pub fn random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        loop {
            let psi: Vec<C64> = (0..d)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            if let Ok(rho) = Self::pure(&psi) {
                return rho;
            }
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.matrix.rows()
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> Result<usize> {
        Ok(eigh(&self.matrix)?.eigenvalues().iter().filter(|&&l| l > tol).count())
    }
}

/// Euclidean projection of `v` onto the probability simplex.
///
/// Sorts descending (stable, so ties keep index order), finds the largest
/// prefix that stays positive after a common shift, and clips the rest.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "cannot project an empty vector");
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Frobenius-nearest density matrix to a Hermitian `s`.
pub fn project_to_density(s: &Matrix) -> Result<DensityMatrix> {
    let e = eigh(s)?;
    let p = project_simplex(e.eigenvalues());
    let v = e.eigenvectors();
    let d = s.rows();
    let m = Matrix::from_fn(d, d, |i, j| {
        (0..d).map(|k| v[(i, k)] * p[k] * v[(j, k)].conj()).sum()
    });
    Ok(DensityMatrix {
        matrix: m.hermitian_part(),
    })
}

/// `||a - b||_1` for Hermitian `a`, `b`: the sum of absolute eigenvalues of the difference.
pub fn trace_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    Ok(eigh(&(a - b))?.eigenvalues().iter().map(|l| l.abs()).sum())
}
