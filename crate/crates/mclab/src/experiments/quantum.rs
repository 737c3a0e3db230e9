//! Tomography with a 2-design measurement and random product formulas.

use mclab_core::linalg::{read_matrix, spectral_norm};
use mclab_core::quantum::{
    builtin_design, channel_error, random_product, read_design, tomography_estimate, tomography_sample_count,
    tomography_tail_bound, trace_distance, trotter_bias, trotter_sample_count, DensityMatrix, HamiltonianSum,
    MeasurementDesign,
};
use mclab_core::rng::stream;

use super::{aggregate_columns, check_tail_at_most, Ctx, Experiment};
use crate::error::{bad, Result};
use crate::params::{ParamKind, ParamSpec};
use crate::report::{Relation, ReportBody};

const TOMOGRAPHY_ANCHOR: &str =
    "tomography with a 2-design: n >= 5 eps^-2 d log(2d/delta) single-copy measurements give ||S_n - rho|| < eps w.p. 1-delta";

const STATE_HELP: &str = "mixed, basis:K, random[:SEED], or a density matrix file";

pub const TOMOGRAPHY: Experiment = Experiment {
    name: "tomography",
    anchor: TOMOGRAPHY_ANCHOR,
    summary: "Spectral error of the averaged single-shot estimator and trace error of its projection",
    default_trials: 500,
    params: &[
        ParamSpec { name: "design", kind: ParamKind::Text, default: "mub2", help: "mub2 or a design file" },
        ParamSpec { name: "state", kind: ParamKind::Text, default: "mixed", help: STATE_HELP },
        ParamSpec { name: "dim", kind: ParamKind::Int { min: 1, max: 64 }, default: "2", help: "Hilbert space dimension; must match the design" },
        ParamSpec { name: "eps", kind: ParamKind::Real { min: f64::MIN_POSITIVE, max: 10.0 }, default: "0.5", help: "spectral accuracy" },
        ParamSpec { name: "delta", kind: ParamKind::Real { min: f64::MIN_POSITIVE, max: 0.999 }, default: "0.1", help: "failure probability" },
        ParamSpec { name: "samples", kind: ParamKind::Int { min: 0, max: 100_000_000 }, default: "0", help: "measurements n; 0 uses the sample count" },
    ],
    run: tomography_run,
};

fn load_design(spec: &str, d: usize) -> Result<MeasurementDesign> {
    let design = match spec {
        "mub2" => builtin_design(spec)?,
        path => read_design(path).map_err(|e| bad(format!("--design {path:?}: {e}")))?,
    };
    if design.dimension() != d {
        return Err(bad(format!("--design has dimension {}, but --dim is {d}", design.dimension())));
    }
    Ok(design)
}

/// Resolves a state argument. Random states come from their own seed
/// (default 0), independent of the run seed.
pub(crate) fn load_state(spec: &str, d: usize) -> Result<DensityMatrix> {
    let parts: Vec<&str> = spec.split(':').collect();
    let state = match parts.as_slice() {
        ["mixed"] => DensityMatrix::maximally_mixed(d),
        ["basis", k] => {
            let k: usize = k.parse().map_err(|_| bad(format!("--state {spec:?}: bad index")))?;
            if k >= d {
                return Err(bad(format!("--state {spec:?}: index must be below {d}")));
            }
            DensityMatrix::basis(d, k)
        }
        ["random", rest @ ..] if rest.len() <= 1 => {
            let seed: u64 = match rest {
                [s] => s.parse().map_err(|_| bad(format!("--state {spec:?}: bad seed")))?,
                _ => 0,
            };
            DensityMatrix::random_pure(d, &mut stream(seed, 0))
        }
        _ => {
            let m = read_matrix(spec).map_err(|e| bad(format!("--state {spec:?}: {e}")))?;
            DensityMatrix::new(m).map_err(|e| bad(format!("--state {spec:?}: {e}")))?
        }
    };
    if state.dimension() != d {
        return Err(bad(format!("--state has dimension {}, but --dim is {d}", state.dimension())));
    }
    Ok(state)
}

/// Slack for the per-run trace-norm comparison, which holds exactly.
const LEMMA_SLACK: f64 = 1e-12;

fn tomography_run(ctx: &Ctx, body: &mut ReportBody) -> Result<()> {
    let d = ctx.params.usize("dim")?;
    let design = load_design(ctx.params.text("design")?, d)?;
    let rho = load_state(ctx.params.text("state")?, d)?;
    let eps = ctx.params.real("eps")?;
    let delta = ctx.params.real("delta")?;
    let n = match ctx.params.usize("samples")? {
        0 => tomography_sample_count(d, eps, delta)? as usize,
        n => n,
    };
    let r = rho.rank(1e-9)?;

    let rows = ctx.run_trials(|_, rng| {
        let run = tomography_estimate(&design, &rho, n, rng)?;
        let dev = spectral_norm(&(&run.s_n - rho.matrix()))?;
        let trace_err = trace_distance(run.rho_hat.matrix(), rho.matrix())?;
        let lemma = 4.0 * r as f64 * dev;
        Ok(vec![
            ("deviation", dev),
            ("trace_error", trace_err),
            ("trace_bound", lemma),
            ("comparison_holds", f64::from(u8::from(trace_err <= lemma + LEMMA_SLACK))),
        ])
    })?;
    body.push_trials(rows);

    body.bound("samples", n as f64, TOMOGRAPHY_ANCHOR);
    body.bound("rank", r as f64, "rank of the true state");
    body.bound("tail_bound", tomography_tail_bound(d, n, eps), "2d exp(-3 n eps^2 / (14 d))");
    aggregate_columns(body, &["deviation", "trace_error"]);
    let dev = body.column("deviation");
    let exceed = dev.iter().filter(|&&x| x >= eps).count();
    check_tail_at_most(body, "deviation", exceed, dev.len(), eps, delta, "P{||S_n - rho|| >= eps} against delta");
    let holds = body.column("comparison_holds");
    let misses = holds.iter().filter(|&&x| x < 0.5).count();
    body.check(
        "trace_comparison_failures",
        misses as f64,
        Relation::AtMost,
        0.0,
        "||rho_hat - rho||_1 <= 4 r ||S_n - rho|| in every run",
    );
    Ok(())
}

const TROTTER_ANCHOR: &str =
    "random product formula: n >= 40 eps^-2 L^2 log(2d/delta) factors give a channel within 2 eps of exp(-iH) w.p. 1-delta";

pub const TROTTER: Experiment = Experiment {
    name: "trotter",
    anchor: TROTTER_ANCHOR,
    summary: "Channel error of random products of single-term exponentials for H = sum_q (X_q + Z_q)",
    default_trials: 200,
    params: &[
        ParamSpec { name: "dim", kind: ParamKind::Int { min: 2, max: 256 }, default: "2", help: "Hilbert space dimension, a power of two" },
        ParamSpec { name: "eps", kind: ParamKind::Real { min: f64::MIN_POSITIVE, max: 100.0 }, default: "1.0", help: "accuracy, at most L" },
        ParamSpec { name: "delta", kind: ParamKind::Real { min: f64::MIN_POSITIVE, max: 0.999 }, default: "0.2", help: "failure probability" },
        ParamSpec { name: "steps", kind: ParamKind::Int { min: 0, max: 10_000_000 }, default: "0", help: "factors n; 0 uses the sample count" },
        ParamSpec { name: "bias-steps", kind: ParamKind::Text, default: "10,100,1000", help: "n values for the deterministic bias checks" },
    ],
    run: trotter_run,
};

fn trotter_run(ctx: &Ctx, body: &mut ReportBody) -> Result<()> {
    let d = ctx.params.usize("dim")?;
    if !d.is_power_of_two() {
        return Err(bad(format!("--dim must be a power of two, got {d}")));
    }
    let h = HamiltonianSum::pauli_xz(d.trailing_zeros())?;
    let l = h.strength();
    let eps = ctx.params.real("eps")?;
    let delta = ctx.params.real("delta")?;
    let n = match ctx.params.usize("steps")? {
        0 => trotter_sample_count(l, eps, delta, d)? as usize,
        n => n,
    };
    let u = h.target_unitary()?;

    let rows = ctx.run_trials(|_, rng| {
        let q = random_product(&h, n, rng)?;
        Ok(vec![("channel_error", channel_error(&q, &u)?)])
    })?;
    body.push_trials(rows);

    body.bound("strength", l, "L = sum of term norms");
    body.bound("steps", n as f64, TROTTER_ANCHOR);
    aggregate_columns(body, &["channel_error"]);
    let errs = body.column("channel_error");
    let exceed = errs.iter().filter(|&&x| x >= 2.0 * eps).count();
    check_tail_at_most(body, "channel_error", exceed, errs.len(), 2.0 * eps, delta, "P{2 ||Q - U|| >= 2 eps} against delta");

    for m in ctx.params.list::<usize>("bias-steps")? {
        if m == 0 {
            return Err(bad("--bias-steps entries must be positive"));
        }
        let b = trotter_bias(&h, m)?;
        let mf = m as f64;
        body.check(&format!("bias_n{m}"), b.bias, Relation::AtMost, l * l / mf, "||(E Y)^n - exp(-iH)|| <= L^2/n");
        body.check(
            &format!("factor_gap_n{m}"),
            b.per_factor_gap,
            Relation::AtMost,
            (l / mf).powi(2),
            "||E Y - exp(-iH/n)|| <= (L/n)^2",
        );
    }
    Ok(())
}
