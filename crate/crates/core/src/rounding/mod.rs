//! A simulated binary float system with `p` significand bits and an
//! unbounded exponent, rounded either to nearest or stochastically.
//!
//! Between consecutive representable numbers `x < a < y`, stochastic
//! rounding returns `y` with probability `(a - x) / (y - x)`, so it is
//! unbiased and moves `a` by at most one gap. The gap in the binade of `a`
//! is `2^(e + 1 - p)` for `2^e <= |a| < 2^(e+1)`, hence at most `u |a|` with
//! `u = 2^(1 - p)`.

mod cholesky;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{norms, LinalgError, Matrix};

pub use cholesky::{
    correlation_fixture, sr_cholesky, sr_cholesky_bound, SrCholesky, SrCholeskyBound, SrFlags,
};

#[derive(Debug, Error)]
pub enum RoundingError {
    #[error("precision must be between 2 and 53 bits, got {0}")]
    InvalidPrecision(u32),
    #[error("expected a real matrix")]
    NotReal,
    #[error("expected a symmetric matrix")]
    NotSymmetric,
    #[error("diagonal entry {index} is {value}, expected 1")]
    NotUnitDiagonal { index: usize, value: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("entry ({0}, {1}) = {2} is not representable")]
    NotRepresentable(usize, usize, f64),
    #[error("residual pivot {pivot:e} is not positive at step {step}")]
    BreakdownNonpositivePivot { step: usize, pivot: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Concentration(#[from] crate::concentration::ConcentrationError),
}

pub type Result<T, E = RoundingError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Precision {
    /// Significand bits, including the leading one.
    Bits(u32),
    /// Every real is representable; `u = 0`.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FloatSystem {
    precision: Precision,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundingMode {
    Nearest,
    Stochastic,
}

/// The two-point law of a stochastic rounding: `hi` with probability `p_hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPoint {
    pub lo: f64,
    pub hi: f64,
    pub p_hi: f64,
}

impl TwoPoint {
    pub fn mean(&self) -> f64 {
        self.lo + self.p_hi * (self.hi - self.lo)
    }

    pub fn variance(&self) -> f64 {
        self.p_hi * (1.0 - self.p_hi) * (self.hi - self.lo).powi(2)
    }
}

/// Exponent `e` with `2^e <= |a| < 2^(e+1)`, for finite nonzero `a`.
fn binade(a: f64) -> i32 {
    let bits = a.abs().to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i32;
    if raw == 0 {
        // subnormal: renormalize
        binade(a * 2f64.powi(64)) - 64
    } else {
        raw - 1023
    }
}

impl FloatSystem {
    pub fn new(bits: u32) -> Result<Self> {
        if !(2..=53).contains(&bits) {
            return Err(RoundingError::InvalidPrecision(bits));
        }
        Ok(Self {
            precision: Precision::Bits(bits),
        })
    }

    pub fn exact() -> Self {
        Self {
            precision: Precision::Exact,
        }
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// `u = 2^(1 - p)`, or 0 in exact mode.
    pub fn unit_roundoff(&self) -> f64 {
        match self.precision {
            Precision::Bits(p) => 2f64.powi(1 - p as i32),
            Precision::Exact => 0.0,
        }
    }

    /// Spacing of the representable numbers in the binade of `a`, 0 for `a = 0`.
    pub fn gap(&self, a: f64) -> f64 {
        match self.precision {
            Precision::Exact => 0.0,
            Precision::Bits(_) if a == 0.0 => 0.0,
            Precision::Bits(p) => 2f64.powi(binade(a) + 1 - p as i32),
        }
    }

    /// Magnitudes `lo <= |a| <= hi` of the enclosing representable pair.
    fn bracket_abs(&self, a: f64) -> (f64, f64) {
        let m = a.abs();
        let g = self.gap(a);
        if g == 0.0 {
            return (m, m);
        }
        // m / g is an integer plus fraction below 2^p: exact in f64
        let lo = (m / g).floor() * g;
        if lo == m {
            (m, m)
        } else {
            (lo, lo + g)
        }
    }

    pub fn contains(&self, a: f64) -> bool {
        let (lo, hi) = self.bracket_abs(a);
        lo == hi
    }

    /// The stochastic rounding law of `a`.
    pub fn two_point(&self, a: f64) -> TwoPoint {
        let (lo, hi) = self.bracket_abs(a);
        let p_up = if hi > lo { (a.abs() - lo) / (hi - lo) } else { 0.0 };
        if a.is_sign_negative() {
            TwoPoint {
                lo: -hi,
                hi: -lo,
                p_hi: if hi > lo { 1.0 - p_up } else { 0.0 },
            }
        } else {
            TwoPoint { lo, hi, p_hi: p_up }
        }
    }

    /// Round to nearest, ties to even significand.
    pub fn round_nearest(&self, a: f64) -> f64 {
        let (lo, hi) = self.bracket_abs(a);
        if lo == hi {
            return a;
        }
        let m = a.abs();
        let down = m - lo;
        let up = hi - m;
        let r = if down < up {
            lo
        } else if up < down {
            hi
        } else {
            let g = hi - lo;
            if ((lo / g) as u64).is_multiple_of(2) {
                lo
            } else {
                hi
            }
        };
        r.copysign(a)
    }

    /// Unbiased stochastic rounding. Consumes exactly one uniform draw,
    /// even when `a` is representable, so streams stay aligned across modes.
    pub fn round_stochastic<R: Rng + ?Sized>(&self, a: f64, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let (lo, hi) = self.bracket_abs(a);
        if lo == hi {
            return a;
        }
        let frac = (a.abs() - lo) / (hi - lo);
        let m = if u < frac { hi } else { lo };
        m.copysign(a)
    }

    pub fn round<R: Rng + ?Sized>(&self, a: f64, mode: RoundingMode, rng: &mut R) -> f64 {
        match mode {
            RoundingMode::Nearest => self.round_nearest(a),
            RoundingMode::Stochastic => self.round_stochastic(a, rng),
        }
    }
}

/// Entrywise rounding of a real matrix, one independent draw per entry in
/// row-major order.
pub fn round_matrix<R: Rng + ?Sized>(
    sys: &FloatSystem,
    a: &Matrix,
    mode: RoundingMode,
    rng: &mut R,
) -> Result<Matrix> {
    if !a.is_real() {
        return Err(RoundingError::NotReal);
    }
    let mut out = a.clone();
    for z in out.as_mut_slice() {
        z.re = sys.round(z.re, mode, rng);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundingBound {
    /// `u [sqrt(2 ||A||_rc2^2 log(d1 + d2)) + ||A||_max log(d1 + d2) / 3]`.
    pub stochastic: f64,
    /// Worst-case deterministic comparator `u ||A||_rc1`.
    pub deterministic: f64,
}

/// Bound on `E||A - sr(A)||` with the deterministic comparator.
pub fn stochastic_rounding_bound(sys: &FloatSystem, a: &Matrix) -> Result<RoundingBound> {
    if !a.is_real() {
        return Err(RoundingError::NotReal);
    }
    let n = norms(a)?;
    let u = sys.unit_roundoff();
    let l = ((a.rows() + a.cols()) as f64).ln();
    Ok(RoundingBound {
        stochastic: u * ((2.0 * n.rc2 * n.rc2 * l).sqrt() + n.max_norm * l / 3.0),
        deterministic: u * n.rc1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn precision_range() {
        assert!(FloatSystem::new(1).is_err());
        assert!(FloatSystem::new(54).is_err());
        assert_eq!(FloatSystem::new(8).unwrap().unit_roundoff(), 2f64.powi(-7));
        assert_eq!(FloatSystem::exact().unit_roundoff(), 0.0);
    }

    #[test]
    fn nearest_examples() {
        let s = FloatSystem::new(2).unwrap();
        assert_eq!(s.round_nearest(1.5), 1.5);
        assert_eq!(s.round_nearest(1.2), 1.0);
        assert_eq!(s.round_nearest(1.25), 1.0);
        assert_eq!(s.round_nearest(1.75), 2.0);
        assert_eq!(s.round_nearest(-1.2), -1.0);
        assert_eq!(s.round_nearest(0.0), 0.0);
        // 3 = 1.5 * 2 in F; 3.5 ties between 3 (j=1, odd) and 4 (even)
        assert_eq!(s.round_nearest(3.5), 4.0);
    }

    #[test]
    fn stochastic_examples() {
        let s = FloatSystem::new(2).unwrap();
        let tp = s.two_point(1.25);
        assert_eq!((tp.lo, tp.hi, tp.p_hi), (1.0, 1.5, 0.5));
        let tp = s.two_point(-1.25);
        assert_eq!((tp.lo, tp.hi, tp.p_hi), (-1.5, -1.0, 0.5));

        let mut rng = stream(1, 0);
        for _ in 0..100 {
            assert_eq!(s.round_stochastic(1.5, &mut rng), 1.5);
            let r = s.round_stochastic(1.25, &mut rng);
            assert!(r == 1.0 || r == 1.5);
        }
    }

    #[test]
    fn subnormal_and_large_inputs() {
        let s = FloatSystem::new(4).unwrap();
        let tiny = f64::MIN_POSITIVE / 3.0;
        let r = s.round_nearest(tiny);
        assert!((r - tiny).abs() <= s.unit_roundoff() * tiny);
        let big = 1.0e300 * 1.3;
        assert!((s.round_nearest(big) - big).abs() <= s.unit_roundoff() * big);
    }

    #[test]
    fn rounding_bound_examples() {
        let s = FloatSystem::new(3).unwrap();
        let z = stochastic_rounding_bound(&s, &Matrix::zeros(3, 3)).unwrap();
        assert_eq!((z.stochastic, z.deterministic), (0.0, 0.0));

        let ones = Matrix::from_real_fn(4, 4, |_, _| 1.0);
        let b = stochastic_rounding_bound(&s, &ones).unwrap();
        let l = 8f64.ln();
        let want = 0.25 * ((8.0 * l).sqrt() + l / 3.0);
        assert!((b.stochastic - want).abs() < 1e-14);
        assert!((b.stochastic - 1.192_95).abs() < 1e-5);
        assert_eq!(b.deterministic, 1.0);

        let big = Matrix::from_real_fn(100, 100, |_, _| 1.0);
        let b = stochastic_rounding_bound(&s, &big).unwrap();
        assert!(b.stochastic < b.deterministic);
    }

    #[test]
    fn round_matrix_fixes_representable_input() {
        let s = FloatSystem::new(8).unwrap();
        let a = Matrix::from_rows(&[[1.0, -0.5], [0.75, 3.0]]);
        let mut rng = stream(2, 0);
        assert_eq!(round_matrix(&s, &a, RoundingMode::Stochastic, &mut rng).unwrap(), a);
        let odd = Matrix::from_rows(&[[0.1, 1.0 / 3.0]]);
        let exact = FloatSystem::exact();
        assert_eq!(round_matrix(&exact, &odd, RoundingMode::Stochastic, &mut rng).unwrap(), odd);
        let c = Matrix::identity(2).scale(crate::linalg::C64::new(0.0, 1.0));
        assert!(matches!(
            round_matrix(&s, &c, RoundingMode::Nearest, &mut rng),
            Err(RoundingError::NotReal)
        ));
    }
}
