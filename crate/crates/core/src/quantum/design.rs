use std::fmt::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::{project_to_density, DensityMatrix, QuantumError, Result};
use crate::linalg::{Matrix, C64};

/// Rank-one measurement on `C^d` with effects `H_j = (d/m) u_j u_j*`.
///
/// Construction only checks shapes and finiteness. Whether the vectors form
/// a 2-design is decided by [`validate_design`].
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementDesign {
    d: usize,
    vectors: Vec<Vec<C64>>,
}

impl MeasurementDesign {
    pub fn new(d: usize, vectors: Vec<Vec<C64>>) -> Result<Self> {
        if d == 0 || vectors.is_empty() {
            return Err(QuantumError::InvalidDesign("empty design".into()));
        }
        for (j, u) in vectors.iter().enumerate() {
            if u.len() != d {
                return Err(QuantumError::InvalidDesign(format!(
                    "vector {j} has length {}, expected {d}",
                    u.len()
                )));
            }
            if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(QuantumError::InvalidDesign(format!("vector {j} is not finite")));
            }
        }
        Ok(Self { d, vectors })
    }

    /// Like [`new`](Self::new) but also requires [`validate_design`] at `tol`.
    pub fn validated(d: usize, vectors: Vec<Vec<C64>>, tol: f64) -> Result<Self> {
        let design = Self::new(d, vectors)?;
        if !validate_design(&design, tol) {
            return Err(QuantumError::InvalidDesign(format!(
                "second-moment identity fails at tolerance {tol:e}"
            )));
        }
        Ok(design)
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    /// `u_j u_j*`.
    pub fn projector(&self, j: usize) -> Matrix {
        Matrix::outer(&self.vectors[j], &self.vectors[j])
    }

    /// `sum_j (d/m) u_j u_j*`, which is `I` for a valid design.
    pub fn effect_sum(&self) -> Matrix {
        let w = self.d as f64 / self.len() as f64;
        let mut acc = Matrix::zeros(self.d, self.d);
        for j in 0..self.len() {
            acc = &acc + &self.projector(j).scale_real(w);
        }
        acc
    }
}

/// Built-in designs. Only `"mub2"` ships: the three mutually unbiased
/// bases of `C^2`.
pub fn builtin_design(name: &str) -> Result<MeasurementDesign> {
    match name {
        "mub2" => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let r = |x: f64| C64::new(x, 0.0);
            let vectors = vec![
                vec![r(1.0), r(0.0)],
                vec![r(0.0), r(1.0)],
                vec![r(s), r(s)],
                vec![r(s), r(-s)],
                vec![r(s), C64::new(0.0, s)],
                vec![r(s), C64::new(0.0, -s)],
            ];
            MeasurementDesign::new(2, vectors)
        }
        other => Err(QuantumError::UnknownDesign(other.to_string())),
    }
}

fn hermitian_basis(d: usize) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        for l in k..d {
            let mut a = Matrix::zeros(d, d);
            a[(k, l)] = C64::new(1.0, 0.0);
            a[(l, k)] = C64::new(1.0, 0.0);
            out.push(a);
            if l > k {
                let mut b = Matrix::zeros(d, d);
                b[(k, l)] = C64::new(0.0, 1.0);
                b[(l, k)] = C64::new(0.0, -1.0);
                out.push(b);
            }
        }
    }
    out
}

/// Largest entrywise residual of the second-moment identity
/// `(1/m) sum_j Tr[u_j u_j* A] u_j u_j* = (A + Tr[A] I) / (d(d+1))`
/// over a basis of `d^2` Hermitian matrices.
pub fn reconstruction_defect(design: &MeasurementDesign) -> f64 {
    let d = design.dimension();
    let m = design.len() as f64;
    let projectors: Vec<Matrix> = (0..design.len()).map(|j| design.projector(j)).collect();
    let mut worst = 0.0_f64;
    for a in hermitian_basis(d) {
        let mut lhs = Matrix::zeros(d, d);
        for p in &projectors {
            let w = (p * &a).trace() / m;
            lhs = &lhs + &p.scale(w);
        }
        let rhs = (&a + &Matrix::identity(d).scale(a.trace())).scale_real(1.0 / (d * (d + 1)) as f64);
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    worst
}

/// Whether every vector has unit norm and the second-moment identity holds
/// within `tol`.
pub fn validate_design(design: &MeasurementDesign, tol: f64) -> bool {
    let unit = design.vectors().iter().all(|u| {
        let n2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        (n2.sqrt() - 1.0).abs() <= tol
    });
    unit && reconstruction_defect(design) <= tol
}

fn check_dims(design: &MeasurementDesign, rho: &DensityMatrix) -> Result<()> {
    if design.dimension() != rho.dimension() {
        return Err(QuantumError::DimensionMismatch {
            expected: design.dimension(),
            found: rho.dimension(),
        });
    }
    Ok(())
}

/// `P{J = j} = Tr[H_j rho]`, renormalized when the total is within `1e-9` of one.
pub fn born_probabilities(design: &MeasurementDesign, rho: &DensityMatrix) -> Result<Vec<f64>> {
    check_dims(design, rho)?;
    let w = design.dimension() as f64 / design.len() as f64;
    let raw: Vec<f64> = design
        .vectors()
        .iter()
        .map(|u| {
            let ru = rho.matrix().mat_vec(u);
            w * u.iter().zip(&ru).map(|(a, b)| a.conj() * b).sum::<C64>().re
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    if (sum - 1.0).abs() > 1e-9 || min < -1e-9 {
        return Err(QuantumError::BadDistribution { sum, min });
    }
    Ok(raw.iter().map(|p| p.max(0.0) / sum).collect())
}

/// Draws a measurement outcome by Born's rule.
pub fn born_sample<R: Rng + ?Sized>(
    design: &MeasurementDesign,
    rho: &DensityMatrix,
    rng: &mut R,
) -> Result<usize> {
    let p = born_probabilities(design, rho)?;
    let dist = WeightedIndex::new(&p).map_err(|_| QuantumError::BadDistribution {
        sum: p.iter().sum(),
        min: 0.0,
    })?;
    Ok(dist.sample(rng))
}

/// `(d+1) u_j u_j* - I`.
pub fn single_shot_estimator(design: &MeasurementDesign, j: usize) -> Matrix {
    let d = design.dimension();
    &design.projector(j).scale_real((d + 1) as f64) - &Matrix::identity(d)
}

/// Exact `E[Y] = sum_j P{J = j} ((d+1) u_j u_j* - I)`; equals `rho` for a 2-design.
pub fn estimator_mean(design: &MeasurementDesign, rho: &DensityMatrix) -> Result<Matrix> {
    let p = born_probabilities(design, rho)?;
    let d = design.dimension();
    let mut acc = Matrix::zeros(d, d);
    for (j, pj) in p.iter().enumerate() {
        acc = &acc + &single_shot_estimator(design, j).scale_real(*pj);
    }
    Ok(acc)
}

#[derive(Clone, Debug)]
pub struct Tomography {
    /// Sample mean of the single-shot estimators.
    pub s_n: Matrix,
    /// Frobenius projection of `s_n` onto the density matrices.
    pub rho_hat: DensityMatrix,
    /// Outcome counts per design vector.
    pub counts: Vec<usize>,
}

/// Measures `n` copies of `rho` and averages the single-shot estimators.
pub fn tomography_estimate<R: Rng + ?Sized>(
    design: &MeasurementDesign,
    rho: &DensityMatrix,
    n: usize,
    rng: &mut R,
) -> Result<Tomography> {
    if n == 0 {
        return Err(QuantumError::InvalidParameter("need at least one measurement".into()));
    }
    let p = born_probabilities(design, rho)?;
    let dist = WeightedIndex::new(&p).map_err(|_| QuantumError::BadDistribution {
        sum: p.iter().sum(),
        min: 0.0,
    })?;
    let mut counts = vec![0usize; design.len()];
    for _ in 0..n {
        counts[dist.sample(rng)] += 1;
    }
    let d = design.dimension();
    let mut s_n = Matrix::zeros(d, d);
    for (j, &c) in counts.iter().enumerate() {
        if c > 0 {
            s_n = &s_n + &single_shot_estimator(design, j).scale_real(c as f64 / n as f64);
        }
    }
    let s_n = s_n.hermitian_part();
    let rho_hat = project_to_density(&s_n)?;
    Ok(Tomography { s_n, rho_hat, counts })
}

fn check_accuracy(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(QuantumError::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(QuantumError::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `ceil(5 eps^-2 d log(2d / delta))` measurements for `||S_n - rho|| < eps`
/// with probability `1 - delta`.
pub fn tomography_sample_count(d: usize, eps: f64, delta: f64) -> Result<u64> {
    check_accuracy(eps, delta)?;
    if d == 0 {
        return Err(QuantumError::InvalidParameter("dimension must be positive".into()));
    }
    let d = d as f64;
    Ok((5.0 * d * (2.0 * d / delta).ln() / (eps * eps)).ceil() as u64)
}

/// `2d exp(-3 n eps^2 / (14 d))`, the tail bound for `||S_n - rho|| >= eps`.
pub fn tomography_tail_bound(d: usize, n: usize, eps: f64) -> f64 {
    let d = d as f64;
    2.0 * d * (-3.0 * n as f64 * eps * eps / (14.0 * d)).exp()
}

/// `ceil(80 eps^-2 r^2 d log(2d / delta))`, enough for the projected
/// estimator to be `eps`-close in trace norm.
pub fn projected_sample_count(d: usize, rank: usize, eps: f64, delta: f64) -> Result<u64> {
    check_accuracy(eps, delta)?;
    if d == 0 || rank == 0 || rank > d {
        return Err(QuantumError::InvalidParameter(format!("rank {rank} invalid for dimension {d}")));
    }
    let (d, r) = (d as f64, rank as f64);
    Ok((80.0 * r * r * d * (2.0 * d / delta).ln() / (eps * eps)).ceil() as u64)
}

fn parse_err(line: usize, msg: impl Into<String>) -> QuantumError {
    QuantumError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses a design file: a dimension line, then one vector per line as
/// `2d` reals with real and imaginary parts interleaved. `#` starts a
/// comment. The result is not validated as a 2-design.
pub fn design_from_text(text: &str) -> Result<MeasurementDesign> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (n0, head) = lines.next().ok_or_else(|| parse_err(1, "missing dimension line"))?;
    let d: usize = head
        .parse()
        .map_err(|_| parse_err(n0, format!("bad dimension {head:?}")))?;
    let mut vectors = Vec::new();
    for (n, line) in lines {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(n, format!("bad number {t:?}"))))
            .collect::<Result<_>>()?;
        if vals.len() != 2 * d {
            return Err(parse_err(n, format!("expected {} reals, found {}", 2 * d, vals.len())));
        }
        vectors.push(vals.chunks(2).map(|c| C64::new(c[0], c[1])).collect());
    }
    MeasurementDesign::new(d, vectors)
}

pub fn design_to_text(design: &MeasurementDesign) -> String {
    let mut out = format!("{}\n", design.dimension());
    for u in design.vectors() {
        let parts: Vec<String> = u.iter().flat_map(|z| [format!("{:?}", z.re), format!("{:?}", z.im)]).collect();
        writeln!(out, "{}", parts.join(" ")).unwrap();
    }
    out
}

/// Reads a design file and requires the 2-design identity at `1e-9`.
pub fn read_design(path: impl AsRef<Path>) -> Result<MeasurementDesign> {
    let design = design_from_text(&std::fs::read_to_string(path)?)?;
    MeasurementDesign::validated(design.d, design.vectors, 1e-9)
}

pub fn write_design(path: impl AsRef<Path>, design: &MeasurementDesign) -> Result<()> {
    std::fs::write(path, design_to_text(design))?;
    Ok(())
}
