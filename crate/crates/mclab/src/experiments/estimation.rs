//! Active-subspace sensitivity estimates and covariance confidence sequences.

use mclab_core::estimation::{
    active_subspace, active_subspace_error_bound, active_subspace_sample_count, covariance_confidence_radius,
    covariance_sequence, empirical_sensitivity, relative_deviations, AxisModel, BoundedVectorModel, GradientModel,
    LinearModel, QuadraticModel, TwoPointModel,
};
use mclab_core::concentration::binomial_sigma;
use mclab_core::linalg::spectral_norm;

use super::{aggregate_columns, check_mean_at_most, Ctx, Experiment};
use crate::error::{bad, Result};
use crate::params::{ParamKind, ParamSpec};
use crate::report::{Relation, ReportBody};

const SENSITIVITY: &str =
    "sampled active subspaces: E||Sigma_hat_n - Sigma||/||Sigma|| <= sqrt(2 beta) + beta/3, beta = L^2 log(2d)/(||Sigma|| n)";

pub const ACTIVE_SUBSPACE: Experiment = Experiment {
    name: "active-subspace",
    anchor: SENSITIVITY,
    summary: "Relative error of the empirical sensitivity matrix of a Lipschitz function",
    default_trials: 500,
    params: &[
        ParamSpec { name: "dim", kind: ParamKind::Int { min: 1, max: 64 }, default: "10", help: "input dimension d" },
        ParamSpec { name: "samples", kind: ParamKind::Text, default: "50,200", help: "gradient samples n per estimate" },
        ParamSpec { name: "model", kind: ParamKind::Choice(&["quadratic", "linear"]), default: "quadratic", help: "built-in function" },
    ],
    run: active_subspace_run,
};

fn gradient_model(name: &str, d: usize) -> Result<Box<dyn GradientModel + Sync>> {
    Ok(match name {
        "quadratic" => Box::new(QuadraticModel::builtin(d)?),
        "linear" => Box::new(LinearModel::new(vec![1.0 / (d as f64).sqrt(); d])?),
        other => return Err(bad(format!("unknown model {other:?}"))),
    })
}

fn active_subspace_run(ctx: &Ctx, body: &mut ReportBody) -> Result<()> {
    let d = ctx.params.usize("dim")?;
    let ns: Vec<usize> = ctx.params.list("samples")?;
    if ns.contains(&0) {
        return Err(bad("--samples entries must be positive"));
    }
    let model = gradient_model(ctx.params.text("model")?, d)?;
    let sigma = model
        .analytic_sigma()
        .ok_or_else(|| bad("model has no closed-form sensitivity matrix"))?;
    let norm_sigma = spectral_norm(&sigma)?;
    let top = active_subspace(&sigma, 1)?;

    let rows = ctx.run_trials(|_, rng| {
        let mut row = Vec::new();
        for &n in &ns {
            let hat = empirical_sensitivity(model.as_ref(), n, rng)?;
            row.push((format!("rel_error_n{n}"), spectral_norm(&(&hat - &sigma))? / norm_sigma));
            let est = active_subspace(&hat, 1)?;
            let cos: f64 = (0..d).map(|i| (top[(i, 0)].conj() * est[(i, 0)]).re).sum();
            row.push((format!("top_cosine_n{n}"), cos.abs()));
        }
        Ok(row)
    })?;
    body.push_trials(rows);

    let l = model.lipschitz();
    body.bound("lipschitz", l, "L bounds ||grad f|| on the sampling distribution");
    body.bound("sigma_norm", norm_sigma, "||Sigma|| of the closed-form sensitivity matrix");
    for &n in &ns {
        let b = body.bound(&format!("error_bound_n{n}"), active_subspace_error_bound(l, norm_sigma, d, n), SENSITIVITY);
        let key = format!("rel_error_n{n}");
        let xs = body.column(&key);
        check_mean_at_most(body, &key, &xs, b, "mean relative error against the bound");
        let cos = format!("top_cosine_n{n}");
        aggregate_columns(body, &[cos.as_str()]);
    }
    body.bound(
        "samples_for_eps_0.5",
        active_subspace_sample_count(l, norm_sigma, d, 0.5) as f64,
        "n >= 4 eps^-2 L^2 log(2d)/||Sigma|| makes the bound at most eps",
    );
    Ok(())
}

const UNIFORM: &str =
    "uniform covariance estimation: for all n, ||Sigma_hat_n - Sigma||/||Sigma|| <= sqrt(8 beta_n) + 2 beta_n/3 with probability 1 - delta";

pub const COVARIANCE_SEQ: Experiment = Experiment {
    name: "covariance-seq",
    anchor: UNIFORM,
    summary: "Coverage of the time-uniform covariance radius along whole sample paths",
    default_trials: 400,
    params: &[
        ParamSpec { name: "dim", kind: ParamKind::Int { min: 1, max: 64 }, default: "4", help: "dimension d" },
        ParamSpec { name: "delta", kind: ParamKind::Real { min: f64::MIN_POSITIVE, max: 0.999 }, default: "0.1", help: "failure probability" },
        ParamSpec { name: "horizon", kind: ParamKind::Int { min: 1, max: 1 << 16 }, default: "2048", help: "path length N" },
        ParamSpec { name: "model", kind: ParamKind::Choice(&["axis", "two-point"]), default: "axis", help: "built-in centered vector" },
        ParamSpec { name: "bound", kind: ParamKind::Real { min: f64::MIN_POSITIVE, max: 1e6 }, default: "1", help: "norm bound L" },
    ],
    run: covariance_run,
};

fn vector_model(name: &str, d: usize, l: f64) -> Result<Box<dyn BoundedVectorModel + Sync>> {
    Ok(match name {
        "axis" => Box::new(AxisModel::new(d, l)?),
        "two-point" => Box::new(TwoPointModel::new(vec![l / (d as f64).sqrt(); d])?),
        other => return Err(bad(format!("unknown model {other:?}"))),
    })
}

fn covariance_run(ctx: &Ctx, body: &mut ReportBody) -> Result<()> {
    let d = ctx.params.usize("dim")?;
    let delta = ctx.params.real("delta")?;
    let horizon = ctx.params.usize("horizon")?;
    let model = vector_model(ctx.params.text("model")?, d, ctx.params.real("bound")?)?;
    let sigma = model.analytic_sigma();
    let norm_sigma = spectral_norm(&sigma)?;
    let l = model.bound();
    let radii: Vec<f64> = (1..=horizon)
        .map(|n| covariance_confidence_radius(l, norm_sigma, d, delta, n))
        .collect();

    let rows = ctx.run_trials(|_, rng| {
        let path = covariance_sequence(model.as_ref(), horizon, rng)?;
        let dev = relative_deviations(&path, &sigma)?;
        let worst = dev.iter().zip(&radii).map(|(x, r)| x / r).fold(0.0, f64::max);
        let first_miss = dev.iter().zip(&radii).position(|(x, r)| x > r);
        Ok(vec![
            ("covered", f64::from(u8::from(first_miss.is_none()))),
            ("worst_ratio", worst),
            ("first_violation", first_miss.map_or(0.0, |k| (k + 1) as f64)),
            ("final_deviation", dev[horizon - 1]),
        ])
    })?;
    body.push_trials(rows);

    body.bound("radius_n1", radii[0], UNIFORM);
    body.bound(&format!("radius_n{horizon}"), radii[horizon - 1], UNIFORM);
    let covered = body.column("covered");
    let n = covered.len();
    let k = covered.iter().filter(|&&c| c > 0.5).count();
    let t = body.tail_count("covered", k, n, 1.0);
    aggregate_columns(body, &["worst_ratio", "final_deviation"]);
    let target = 1.0 - delta;
    body.check(
        "coverage_fraction",
        t.fraction,
        Relation::AtLeast,
        target - 3.0 * binomial_sigma(target, n),
        "fraction of paths inside the radius at every n",
    );
    Ok(())
}
