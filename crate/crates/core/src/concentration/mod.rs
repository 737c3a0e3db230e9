//! Variance statistics for random matrix sums and the tail and expectation
//! bounds they drive.
//!
//! For a sum `S` of independent centered summands with `||X_k|| <= B`, the
//! matrix variance `v = max(||E SS*||, ||E S*S||)` and the dimensions
//! `(d1, d2)` are all the Bernstein bounds need. Martingales replace `v`
//! with the running conditional quadratic variation recorded in a
//! [`MartingaleTrace`].

pub mod stats;
mod variance;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{eigh, spectral_norm, LinalgError, Matrix};

pub use stats::{binomial_sigma, mean_sd, wilson_interval, Interval};
pub use variance::VarianceFunction;

#[derive(Debug, Error)]
pub enum ConcentrationError {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid statistics: {0}")]
    InvalidStats(String),
    #[error("dimension mismatch between summand second moments")]
    DimensionMismatch,
    #[error("quadratic variation decreased at step {step}")]
    NonMonotoneQV { step: usize },
    #[error("increment {step} has norm {norm} above the bound {bound}")]
    IncrementExceedsBound { step: usize, norm: f64, bound: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T, E = ConcentrationError> = std::result::Result<T, E>;

/// `(v, B, B2, d1, d2)`; serialized with those field names.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationStats {
    pub v: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "B2")]
    pub b2: f64,
    pub d1: usize,
    pub d2: usize,
}

impl ConcentrationStats {
    /// Validated constructor. `b2` is the tail content; pass `b` when only
    /// the uniform bound is known.
    pub fn new(v: f64, b: f64, b2: f64, d1: usize, d2: usize) -> Result<Self> {
        let s = Self { v, b, b2, d1, d2 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ConcentrationError::InvalidStats(m.to_string()));
        if ![self.v, self.b, self.b2].iter().all(|x| x.is_finite() && *x >= 0.0) {
            return bad("v, B and B2 must be finite and nonnegative");
        }
        if self.d1 == 0 || self.d2 == 0 {
            return bad("dimensions must be positive");
        }
        if self.b2 > self.b * (1.0 + 1e-12) + 1e-12 {
            return bad("tail content B2 exceeds B");
        }
        Ok(())
    }

    fn log_dim(&self) -> f64 {
        ((self.d1 + self.d2) as f64).ln()
    }
}

/// `max(||sum L_k||, ||sum R_k||)` from per-summand second moments
/// `L_k = E[X_k X_k*]` (d1 x d1) and `R_k = E[X_k* X_k]` (d2 x d2).
pub fn matrix_variance(left: &[Matrix], right: &[Matrix]) -> Result<f64> {
    fn total(ms: &[Matrix]) -> Result<Matrix> {
        let first = ms.first().ok_or(ConcentrationError::EmptyInput)?;
        if !first.is_square() || ms.iter().any(|m| m.dims() != first.dims()) {
            return Err(ConcentrationError::DimensionMismatch);
        }
        let mut acc = Matrix::zeros(first.rows(), first.cols());
        for m in ms {
            let e = eigh(m)?;
            if e.lambda_min() < -1e-8 * (1.0 + e.lambda_max().abs()) {
                return Err(LinalgError::NotPsd {
                    lambda_min: e.lambda_min(),
                }
                .into());
            }
            acc = &acc + m;
        }
        Ok(acc)
    }
    let l = spectral_norm(&total(left)?)?;
    let r = spectral_norm(&total(right)?)?;
    Ok(l.max(r))
}

/// `sqrt(2 v log(d1 + d2)) + B log(d1 + d2) / 3`.
pub fn bernstein_expectation_bound(s: &ConcentrationStats) -> f64 {
    let l = s.log_dim();
    (2.0 * s.v * l).sqrt() + s.b * l / 3.0
}

fn tail_formula(v: f64, b: f64, d1: usize, d2: usize, t: f64) -> f64 {
    let dims = (d1 + d2) as f64;
    if t == 0.0 {
        return dims;
    }
    if v == 0.0 && b == 0.0 {
        return 0.0;
    }
    dims * (-(t * t / 2.0) / (v + b * t / 3.0)).exp()
}

/// `(d1 + d2) exp(-(t^2/2) / (v + B t / 3))`, bounding `P{||S|| >= t}`.
pub fn bernstein_tail_bound(s: &ConcentrationStats, t: f64) -> f64 {
    tail_formula(s.v, s.b, s.d1, s.d2, t)
}

/// Deviation level `sqrt(2 v t) + B t / 3` reached with probability at most
/// `(d1 + d2) e^{-t}` while the quadratic variation stays below `v`.
pub fn freedman_threshold(v: f64, b: f64, t: f64) -> f64 {
    (2.0 * v * t).sqrt() + b * t / 3.0
}

/// Bound on `P{exists k: ||S_k - S_0|| >= t and V_k <= v}`.
pub fn freedman_tail_bound(v: f64, b: f64, d1: usize, d2: usize, t: f64) -> f64 {
    tail_formula(v, b, d1, d2, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KhinchinBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Two-sided bracket on `E||Z - EZ||` for a Gaussian matrix with variance `v`.
pub fn khinchin_bounds(v: f64, d1: usize, d2: usize) -> KhinchinBounds {
    KhinchinBounds {
        lower: (2.0 / std::f64::consts::PI * v).sqrt(),
        upper: (2.0 * v * ((d1 + d2) as f64).ln()).sqrt(),
    }
}

/// `sqrt(mean(m_i^2))` over per-trial values of `max_k ||X_k||`.
pub fn tail_content(sample_max_norms: &[f64]) -> Result<f64> {
    if sample_max_norms.is_empty() {
        return Err(ConcentrationError::EmptyInput);
    }
    let ms = sample_max_norms.iter().map(|x| x * x).sum::<f64>() / sample_max_norms.len() as f64;
    Ok(ms.sqrt())
}

/// Both sides of the two-sided expected-norm shape with unit constants.
/// Printed for comparison, never asserted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RosenthalDiagnostic {
    pub lower_shape: f64,
    pub upper_shape: f64,
}

pub fn rosenthal_diagnostic(s: &ConcentrationStats) -> RosenthalDiagnostic {
    let l = s.log_dim();
    RosenthalDiagnostic {
        lower_shape: s.v.sqrt() + s.b2,
        upper_shape: (s.v * l).sqrt() + s.b2 * l,
    }
}

/// Fraction of `trials` at or above `t`, with its Wilson 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EmpiricalTail {
    pub fraction: f64,
    pub exceedances: usize,
    pub trials: usize,
    pub wilson: Interval,
}

pub fn empirical_tail(trials: &[f64], t: f64) -> Result<EmpiricalTail> {
    if trials.is_empty() {
        return Err(ConcentrationError::EmptyInput);
    }
    let k = trials.iter().filter(|&&x| x >= t).count();
    let n = trials.len();
    Ok(EmpiricalTail {
        fraction: k as f64 / n as f64,
        exceedances: k,
        trials: n,
        wilson: wilson_interval(k, n, 1.96),
    })
}

/// A recorded martingale difference sequence with its quadratic variation.
#[derive(Clone, Debug)]
pub struct MartingaleTrace {
    increments: Vec<Matrix>,
    qv: Vec<f64>,
    bound: f64,
}

impl MartingaleTrace {
    pub fn increments(&self) -> &[Matrix] {
        &self.increments
    }

    /// Running `V_k`, nondecreasing.
    pub fn qv(&self) -> &[f64] {
        &self.qv
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// `S_k - S_0` for the final `k`; `None` for an empty trace.
    pub fn total(&self) -> Option<Matrix> {
        let mut it = self.increments.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, x| &acc + x))
    }

    /// `max_k ||S_k - S_0||` along the path.
    pub fn max_deviation(&self) -> Result<f64> {
        let mut worst = 0.0_f64;
        let mut acc: Option<Matrix> = None;
        for x in &self.increments {
            let s = match acc {
                Some(a) => &a + x,
                None => x.clone(),
            };
            worst = worst.max(spectral_norm(&s)?);
            acc = Some(s);
        }
        Ok(worst)
    }
}

/// Records `increments` with `qv[k-1] = qv_fn(k)` for `k = 1..=n`.
///
/// `qv_fn` is the analytic conditional quadratic variation of the model,
/// or an almost-sure upper bound on it.
pub fn record_trace(
    increments: Vec<Matrix>,
    bound: f64,
    qv_fn: impl Fn(usize) -> f64,
) -> Result<MartingaleTrace> {
    let mut qv = Vec::with_capacity(increments.len());
    for (k, x) in increments.iter().enumerate() {
        let norm = spectral_norm(x)?;
        if norm > bound + 1e-9 {
            return Err(ConcentrationError::IncrementExceedsBound {
                step: k + 1,
                norm,
                bound,
            });
        }
        let q = qv_fn(k + 1);
        if !(q >= 0.0) || qv.last().is_some_and(|&p| q < p) {
            return Err(ConcentrationError::NonMonotoneQV { step: k + 1 });
        }
        qv.push(q);
    }
    Ok(MartingaleTrace {
        increments,
        qv,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(v: f64, b: f64, d1: usize, d2: usize) -> ConcentrationStats {
        ConcentrationStats::new(v, b, b, d1, d2).unwrap()
    }

    fn e(d: usize, i: usize, j: usize) -> Matrix {
        Matrix::from_real_fn(d, d, |a, b| if (a, b) == (i, j) { 1.0 } else { 0.0 })
    }

    #[test]
    fn stats_validation() {
        assert!(ConcentrationStats::new(1.0, 1.0, 2.0, 1, 1).is_err());
        assert!(ConcentrationStats::new(-1.0, 1.0, 0.5, 1, 1).is_err());
        assert!(ConcentrationStats::new(1.0, 1.0, 0.5, 0, 1).is_err());
        let json = serde_json::to_string(&stats(1.0, 2.0, 3, 4)).unwrap();
        assert_eq!(json, r#"{"v":1.0,"B":2.0,"B2":2.0,"d1":3,"d2":4}"#);
    }

    #[test]
    fn variance_of_simple_models() {
        let d = 4;
        let diag: Vec<Matrix> = (0..d).map(|i| e(d, i, i)).collect();
        assert!((matrix_variance(&diag, &diag).unwrap() - 1.0).abs() < 1e-14);

        let id = [Matrix::identity(3)];
        assert!((matrix_variance(&id, &id).unwrap() - 1.0).abs() < 1e-14);

        // eps_ij E_ij: E[XX*] = E_ii, E[X*X] = E_jj
        let d = 5;
        let mut left = Vec::new();
        let mut right = Vec::new();
        for i in 0..d {
            for j in 0..d {
                left.push(e(d, i, i));
                right.push(e(d, j, j));
            }
        }
        assert!((matrix_variance(&left, &right).unwrap() - d as f64).abs() < 1e-12);

        assert!(matches!(
            matrix_variance(&[Matrix::identity(2)], &[Matrix::identity(2), Matrix::identity(3)]),
            Err(ConcentrationError::DimensionMismatch)
        ));
    }

    #[test]
    fn bound_values() {
        let b = bernstein_expectation_bound(&stats(1.0, 1.0, 1, 1));
        assert!((b - 1.408_459).abs() < 1e-6, "{b}");
        assert_eq!(bernstein_expectation_bound(&stats(0.0, 0.0, 3, 3)), 0.0);

        let s = stats(1.0, 0.0, 1, 1);
        assert_eq!(bernstein_tail_bound(&s, 0.0), 2.0);
        assert!((bernstein_tail_bound(&s, 2.0) - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        let s = stats(1.0, 1.0, 1, 1);
        assert!(bernstein_tail_bound(&s, 3.0) < bernstein_tail_bound(&s, 1.0));
        assert_eq!(bernstein_tail_bound(&stats(0.0, 0.0, 2, 2), 0.5), 0.0);

        assert_eq!(freedman_threshold(1.0, 1.0, 0.0), 0.0);
        assert!((freedman_threshold(2.0, 1.0, 2.0) - 3.495_093).abs() < 1e-6);
        assert_eq!(freedman_threshold(3.0, 0.0, 2.0), 12f64.sqrt());
        let f = freedman_tail_bound(1.0, 1.0 / 3.0, 1, 1, 1.0);
        assert!((f - 2.0 * (-0.45f64).exp()).abs() < 1e-12, "{f}");
    }

    #[test]
    fn khinchin_values() {
        assert_eq!(khinchin_bounds(0.0, 2, 2), KhinchinBounds { lower: 0.0, upper: 0.0 });
        let k = khinchin_bounds(64.0, 64, 64);
        assert!((k.lower - 6.383).abs() < 1e-3);
        assert!((k.upper - 24.92).abs() < 1e-2);
        // expectation bound = Khinchin upper + B term
        let d = 16;
        let s = stats(d as f64, 1.0, d, d);
        let gap = bernstein_expectation_bound(&s) - khinchin_bounds(d as f64, d, d).upper;
        assert!((gap - (2.0 * d as f64).ln() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tail_content_and_empirical_tail() {
        assert_eq!(tail_content(&[2.0, 2.0, 2.0]).unwrap(), 2.0);
        assert_eq!(tail_content(&[0.0, 0.0]).unwrap(), 0.0);
        assert!((tail_content(&[1.0, 2.0, 3.0]).unwrap() - 2.160_247).abs() < 1e-6);
        assert!(matches!(tail_content(&[]), Err(ConcentrationError::EmptyInput)));

        let xs = [1.0, 2.0, 3.0];
        assert!((empirical_tail(&xs, 2.5).unwrap().fraction - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(empirical_tail(&xs, 0.0).unwrap().fraction, 1.0);
        assert_eq!(empirical_tail(&xs, 9.0).unwrap().fraction, 0.0);
    }

    #[test]
    fn traces() {
        let x = Matrix::from_diag(&[1.0, -1.0]);
        let t = record_trace(vec![x.clone(), x.clone(), -&x], 1.0, |k| k as f64).unwrap();
        assert_eq!(t.qv(), &[1.0, 2.0, 3.0]);
        assert!((t.max_deviation().unwrap() - 2.0).abs() < 1e-14);

        let empty = record_trace(vec![], 1.0, |_| 0.0).unwrap();
        assert!(empty.is_empty() && empty.total().is_none());

        assert!(matches!(
            record_trace(vec![x.clone(), x.clone()], 1.0, |k| 3.0 - k as f64),
            Err(ConcentrationError::NonMonotoneQV { step: 2 })
        ));
        assert!(matches!(
            record_trace(vec![x.scale_real(2.0)], 1.0, |_| 1.0),
            Err(ConcentrationError::IncrementExceedsBound { step: 1, .. })
        ));
    }
}
