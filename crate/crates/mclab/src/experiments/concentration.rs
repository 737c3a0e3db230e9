//! Norms of random matrix series against the Bernstein and Khinchin bounds.

use rand::Rng;
use rand_distr::StandardNormal;

use mclab_core::concentration::{
    bernstein_expectation_bound, bernstein_tail_bound, khinchin_bounds, matrix_variance,
    rosenthal_diagnostic, tail_content, ConcentrationStats, VarianceFunction,
};
use mclab_core::linalg::{spectral_norm, Matrix};

use super::{check_mean_at_most, check_tail_at_most, Ctx, Experiment};
use crate::error::Result;
use crate::params::{ParamKind, ParamSpec};
use crate::report::{Relation, ReportBody};

const EXPECTATION: &str = "matrix Bernstein: E||S|| <= sqrt(2 v log(d1+d2)) + B log(d1+d2)/3";
const TAIL: &str = "matrix Bernstein: P{||S|| >= t} <= (d1+d2) exp(-(t^2/2)/(v + B t/3))";

fn sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Expectation and tail checks shared by the bounded Rademacher series.
fn bernstein_checks(body: &mut ReportBody, stats: &ConcentrationStats, norms: &[f64], thresholds: &[f64]) {
    let e = body.bound("expectation_bound", bernstein_expectation_bound(stats), EXPECTATION);
    check_mean_at_most(body, "norm", norms, e, "mean ||S|| against the expectation bound");
    for &t in thresholds {
        let p = body.bound(&format!("tail_bound_t{t}"), bernstein_tail_bound(stats, t), TAIL);
        let k = norms.iter().filter(|&&x| x >= t).count();
        check_tail_at_most(body, &format!("tail_t{t}"), k, norms.len(), t, p, "empirical tail against min(1, bound)");
    }
    let r = rosenthal_diagnostic(stats);
    body.bound("rosenthal_lower_shape", r.lower_shape, "two-sided shape sqrt(v) + B2 (unit constants, diagnostic)");
    body.bound("rosenthal_upper_shape", r.upper_shape, "two-sided shape sqrt(v log d) + B2 log d (unit constants, diagnostic)");
}

pub const BERNSTEIN_DIAG: Experiment = Experiment {
    name: "bernstein-diag",
    anchor: EXPECTATION,
    summary: "Diagonal Rademacher series S = r^{-1/2} sum_j sum_k eps_jk E_kk with v = 1, B = r^{-1/2}",
    default_trials: 2000,
    params: &[
        ParamSpec { name: "dim", kind: ParamKind::Int { min: 1, max: 256 }, default: "32", help: "matrix dimension d" },
        ParamSpec { name: "copies", kind: ParamKind::Int { min: 1, max: 64 }, default: "1", help: "independent signs per diagonal entry" },
        ParamSpec { name: "thresholds", kind: ParamKind::Text, default: "1,2,3,4", help: "tail levels t" },
    ],
    run: bernstein_diag,
};

fn bernstein_diag(ctx: &Ctx, body: &mut ReportBody) -> Result<()> {
    let d = ctx.params.usize("dim")?;
    let r = ctx.params.usize("copies")?;
    let thresholds: Vec<f64> = ctx.params.list("thresholds")?;
    let scale = 1.0 / (r as f64).sqrt();

    // second moments X X* = X* X = E_kk / r of the summands
    let moments: Vec<Matrix> = (0..r)
        .flat_map(|_| (0..d).map(|k| {
            let mut e = vec![0.0; d];
            e[k] = scale * scale;
            Matrix::from_diag(&e)
        }))
        .collect();
    let v = matrix_variance(&moments, &moments)?;

    let rows = ctx.run_trials(|_, rng| {
        let diag: Vec<f64> = (0..d).map(|_| (0..r).map(|_| sign(rng)).sum::<f64>() * scale).collect();
        let norm = spectral_norm(&Matrix::from_diag(&diag))?;
        Ok(vec![("norm", norm), ("max_summand", scale)])
    })?;
    body.push_trials(rows);
    let norms = body.column("norm");
    let b2 = tail_content(&body.column("max_summand"))?;
    let stats = ConcentrationStats::new(v, scale, b2, d, d)?;
    body.bound("v", v, "matrix variance max(||sum E X X*||, ||sum E X* X||)");
    body.bound("B", scale, "uniform bound on summand norms");
    bernstein_checks(body, &stats, &norms, &thresholds);
    if r == 1 {
        let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
        body.check("norm_at_least_one", min, Relation::AtLeast, 1.0, "every diagonal entry is +-1");
    }
    Ok(())
}

pub const BERNSTEIN_GINIBRE: Experiment = Experiment {
    name: "bernstein-ginibre",
    anchor: EXPECTATION,
    summary: "Rademacher sign matrix sum_ij eps_ij E_ij with v = d, B = 1",
    default_trials: 500,
    params: &[
        ParamSpec { name: "dim", kind: ParamKind::Int { min: 1, max: 128 }, default: "32", help: "matrix dimension d" },
        ParamSpec { name: "thresholds", kind: ParamKind::Text, default: "10,12,14,16,20", help: "tail levels t" },
    ],
    run: bernstein_ginibre,
};

fn bernstein_ginibre(ctx: &Ctx, body: &mut ReportBody) -> Result<()> {
    let d = ctx.params.usize("dim")?;
    let thresholds: Vec<f64> = ctx.params.list("thresholds")?;
    let v = VarianceFunction::ginibre(d, d).matrix_variance()?;
    let rows = ctx.run_trials(|_, rng| {
        let s = Matrix::from_real_fn(d, d, |_, _| sign(rng));
        Ok(vec![("norm", spectral_norm(&s)?), ("max_summand", 1.0)])
    })?;
    body.push_trials(rows);
    let norms = body.column("norm");
    let b2 = tail_content(&body.column("max_summand"))?;
    let stats = ConcentrationStats::new(v, 1.0, b2, d, d)?;
    body.bound("v", v, "matrix variance of the sign matrix, max(d1, d2)");
    bernstein_checks(body, &stats, &norms, &thresholds);
    Ok(())
}

const KHINCHIN: &str = "matrix Khinchin: sqrt(2v/pi) <= E||G|| <= sqrt(2 v log(d1+d2))";

pub const KHINCHIN_GINIBRE: Experiment = Experiment {
    name: "khinchin-ginibre",
    anchor: KHINCHIN,
    summary: "Real Gaussian d x d matrix inside the Khinchin bracket, v = d",
    default_trials: 300,
    params: &[ParamSpec { name: "dim", kind: ParamKind::Int { min: 1, max: 128 }, default: "64", help: "matrix dimension d" }],
    run: khinchin_ginibre,
};

fn khinchin_ginibre(ctx: &Ctx, body: &mut ReportBody) -> Result<()> {
    let d = ctx.params.usize("dim")?;
    let vf = VarianceFunction::ginibre(d, d);
    let v = vf.matrix_variance()?;
    let rows = ctx.run_trials(|_, rng| {
        let g = Matrix::from_real_fn(d, d, |_, _| rng.sample(StandardNormal));
        Ok(vec![("norm", spectral_norm(&g)?)])
    })?;
    body.push_trials(rows);
    let xs = body.column("norm");
    let a = body.aggregate("norm", &xs);
    let k = khinchin_bounds(v, d, d);
    body.bound("v", v, "Ginibre matrix variance v = d");
    body.bound("weak_variance", vf.weak_variance(), "Ginibre weak variance");
    body.bound("interaction", vf.interaction_energy()?, "Ginibre interaction statistic w = 2");
    let lo = body.bound("khinchin_lower", k.lower, KHINCHIN);
    let hi = body.bound("khinchin_upper", k.upper, KHINCHIN);
    body.check("norm_mean_lower", a.mean, Relation::AtLeast, lo - 3.0 * a.se, "mean ||G|| above the lower bracket");
    body.check("norm_mean_upper", a.mean, Relation::AtMost, hi + 3.0 * a.se, "mean ||G|| below the upper bracket");
    let sharp = body.bound("sharp_first_term", 2.0 * v.sqrt(), "leading term 2 sqrt(d) of the sharp Gaussian bound (diagnostic)");
    let rel = (a.mean - sharp).abs() / sharp;
    body.diagnose("norm_near_two_sqrt_d", rel, Relation::AtMost, 0.1, "relative gap to 2 sqrt(d), non-gating");
    Ok(())
}
