//! Stochastic rounding of matrices and of the Cholesky residual update.

use rand::Rng;

use mclab_core::linalg::{spectral_norm, Matrix};
use mclab_core::rounding::{
    correlation_fixture, round_matrix, sr_cholesky, sr_cholesky_bound, stochastic_rounding_bound, FloatSystem,
    RoundingMode,
};

use super::{check_mean_at_most, check_tail_at_most, Ctx, Experiment};
use crate::error::Result;
use crate::params::{ParamKind, ParamSpec};
use crate::report::{Relation, ReportBody};

const ROUNDING: &str =
    "stochastic rounding: E||A - sr(A)|| <= u (sqrt(2 ||A||_rc2^2 log(d1+d2)) + ||A||_max log(d1+d2)/3)";

pub const SR_ROUND: Experiment = Experiment {
    name: "sr-round",
    anchor: ROUNDING,
    summary: "Spectral error of entrywise stochastic rounding of all-ones and random-sign matrices",
    default_trials: 500,
    params: &[
        ParamSpec { name: "dim", kind: ParamKind::Int { min: 1, max: 128 }, default: "64", help: "matrix dimension d" },
        ParamSpec { name: "precision-bits", kind: ParamKind::Int { min: 2, max: 53 }, default: "8", help: "significand bits p" },
        ParamSpec { name: "scale", kind: ParamKind::Real { min: f64::MIN_POSITIVE, max: 1e6 }, default: "0.3", help: "entry magnitude; 0.3 is off-grid" },
    ],
    run: sr_round,
};

fn sr_round(ctx: &Ctx, body: &mut ReportBody) -> Result<()> {
    let d = ctx.params.usize("dim")?;
    let sys = FloatSystem::new(ctx.params.int("precision-bits")? as u32)?;
    let c = ctx.params.real("scale")?;
    let mut setup = ctx.setup_rng(0);
    let inputs = [
        ("ones", Matrix::from_real_fn(d, d, |_, _| c)),
        ("signs", Matrix::from_real_fn(d, d, |_, _| if setup.random::<bool>() { c } else { -c })),
    ];

    let rows = ctx.run_trials(|_, rng| {
        let mut row = Vec::new();
        for (name, a) in &inputs {
            let r = round_matrix(&sys, a, RoundingMode::Stochastic, rng)?;
            row.push((format!("error_{name}"), spectral_norm(&(&r - a))?));
        }
        Ok(row)
    })?;
    body.push_trials(rows);

    body.bound("unit_roundoff", sys.unit_roundoff(), "u = 2^(1-p)");
    for (name, a) in &inputs {
        let b = stochastic_rounding_bound(&sys, a)?;
        let s = body.bound(&format!("stochastic_bound_{name}"), b.stochastic, ROUNDING);
        let w = body.bound(&format!("deterministic_{name}"), b.deterministic, "worst-case comparator u ||A||_rc1");
        let nearest = round_matrix(&sys, a, RoundingMode::Nearest, &mut ctx.setup_rng(1))?;
        body.bound(&format!("nearest_error_{name}"), spectral_norm(&(&nearest - a))?, "round-to-nearest error (reference)");
        let key = format!("error_{name}");
        let xs = body.column(&key);
        check_mean_at_most(body, &key, &xs, s, "mean stochastic error against the bound");
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        body.check(&format!("{key}_below_worst_case"), mean, Relation::AtMost, w, "mean error against u ||A||_rc1");
    }
    Ok(())
}

const CHOLESKY: &str =
    "Cholesky with stochastic rounding: P{||CC* - A|| >= u (2 sqrt(d ||A|| t) + t/3)} <= 2d e^-t";

pub const SR_CHOLESKY: Experiment = Experiment {
    name: "sr-cholesky",
    anchor: CHOLESKY,
    summary: "Backward error of Cholesky with a stochastically rounded residual update",
    default_trials: 500,
    params: &[
        ParamSpec { name: "dim", kind: ParamKind::Int { min: 2, max: 64 }, default: "16", help: "matrix dimension d" },
        ParamSpec { name: "precision-bits", kind: ParamKind::Int { min: 2, max: 53 }, default: "8", help: "significand bits p" },
        ParamSpec { name: "delta", kind: ParamKind::Real { min: f64::MIN_POSITIVE, max: 0.999 }, default: "0.1", help: "sets t = log(2d/delta)" },
        ParamSpec { name: "fixture-seed", kind: ParamKind::Int { min: 0, max: i64::MAX }, default: "2024", help: "seed of the correlation matrix" },
    ],
    run: sr_cholesky_run,
};

fn sr_cholesky_run(ctx: &Ctx, body: &mut ReportBody) -> Result<()> {
    let d = ctx.params.usize("dim")?;
    let sys = FloatSystem::new(ctx.params.int("precision-bits")? as u32)?;
    let delta = ctx.params.real("delta")?;
    let a = correlation_fixture(d, &sys, ctx.params.int("fixture-seed")? as u64)?;
    let norm_a = spectral_norm(&a)?;
    let u = sys.unit_roundoff();
    let t = (2.0 * d as f64 / delta).ln();
    let bound = sr_cholesky_bound(d, norm_a, u, t);

    let rows = ctx.run_trials(|_, rng| {
        let run = sr_cholesky(&sys, &a, rng)?;
        Ok(vec![
            ("error", spectral_norm(&run.error)?),
            ("flagged", f64::from(u8::from(run.flags.any()))),
            ("max_deviation", run.trace.max_deviation()?),
        ])
    })?;
    body.push_trials(rows);

    body.bound("norm_a", norm_a, "||A|| of the fixture");
    body.bound("t", t, "t = log(2d/delta)");
    body.bound("final_qv", 2.0 * u * u * d as f64 * norm_a, "quadratic variation V_d = 2 u^2 d ||A||");
    let thr = body.bound("threshold", bound.threshold, CHOLESKY);
    let p = body.bound("probability_bound", bound.prob_bound, CHOLESKY);

    let unflagged: Vec<f64> = body
        .trials
        .iter()
        .filter(|r| r.get("flagged") == Some(0.0))
        .filter_map(|r| r.get("error"))
        .collect();
    body.aggregate("error", &unflagged);
    let n = unflagged.len();
    let k = unflagged.iter().filter(|&&e| e >= thr).count();
    body.diagnose("unflagged_trials", n as f64, Relation::AtLeast, ctx.trials as f64, "runs violating the residual conditions are excluded");
    if n > 0 {
        check_tail_at_most(body, "exceedance", k, n, thr, p, "unflagged runs above the threshold");
    } else {
        body.check("exceedance_probability", f64::NAN, Relation::AtMost, p, "no unflagged runs");
    }

    let exact = sr_cholesky(&FloatSystem::exact(), &a, &mut ctx.setup_rng(0))?;
    body.check("exact_mode_error", spectral_norm(&exact.error)?, Relation::AtMost, 1e-12, "u = 0 reproduces A");
    Ok(())
}
