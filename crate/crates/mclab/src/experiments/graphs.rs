//! Spectral sparsification, randomized sparse Cholesky, and PCG on Laplacians.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;

use mclab_core::concentration::binomial_sigma;
use mclab_core::graphs::{
    laplacian, pcg_solve, read_graph, sparse_cholesky, sparsifier_sample_count, sparsify, spectral_equivalence,
    GraphError, Laplacian, WeightedGraph,
};
use mclab_core::rng::stream;

use super::{aggregate_columns, check_tail_at_most, Ctx, Experiment};
use crate::error::{bad, Result};
use crate::params::{ParamKind, ParamSpec};
use crate::report::{Relation, ReportBody};

const GRAPH_HELP: &str = "complete:N, path:N, gnp:N:P[:SEED], or an edge-list file";

/// Resolves a graph argument. `gnp` graphs are drawn from their own seed
/// (default 0) so the graph does not change with the run seed.
pub(crate) fn load_graph(spec: &str) -> Result<WeightedGraph> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> Result<usize> {
        s.parse().map_err(|_| bad(format!("--graph {spec:?}: bad vertex count {s:?}")))
    };
    let g = match parts.as_slice() {
        ["complete", n] => WeightedGraph::complete(num(n)?),
        ["path", n] => WeightedGraph::path(num(n)?),
        ["gnp", n, p, rest @ ..] if rest.len() <= 1 => {
            let p: f64 = p.parse().map_err(|_| bad(format!("--graph {spec:?}: bad edge probability")))?;
            let seed: u64 = match rest {
                [s] => s.parse().map_err(|_| bad(format!("--graph {spec:?}: bad seed")))?,
                _ => 0,
            };
            WeightedGraph::gnp_connected(num(n)?, p, &mut stream(seed, 0))
                .map_err(|e| bad(format!("--graph {spec:?}: {e}")))?
        }
        _ => read_graph(spec).map_err(|e| bad(format!("--graph {spec:?}: {e}")))?,
    };
    if g.vertex_count() < 2 {
        return Err(bad(format!("--graph {spec:?}: need at least two vertices")));
    }
    Ok(g)
}

fn load_laplacian(ctx: &Ctx) -> Result<Laplacian> {
    let spec = ctx.params.text("graph")?;
    laplacian(&load_graph(spec)?).map_err(|e| match e {
        GraphError::Disconnected => bad(format!("--graph {spec:?} is disconnected")),
        other => other.into(),
    })
}

const SPARSIFY_ANCHOR: &str =
    "graph sparsification: q >= 3 eps^-2 n log(2n/delta) resistance-weighted samples give (1-eps)L <= Lhat <= (1+eps)L w.p. 1-delta";

pub const SPARSIFY: Experiment = Experiment {
    name: "sparsify",
    anchor: SPARSIFY_ANCHOR,
    summary: "Spectral equivalence and unbiasedness of the effective-resistance sparsifier",
    default_trials: 100,
    params: &[
        ParamSpec { name: "graph", kind: ParamKind::Text, default: "complete:50", help: GRAPH_HELP },
        ParamSpec { name: "eps", kind: ParamKind::Real { min: f64::MIN_POSITIVE, max: 1.0 }, default: "0.5", help: "relative accuracy" },
        ParamSpec { name: "delta", kind: ParamKind::Real { min: f64::MIN_POSITIVE, max: 0.999 }, default: "0.1", help: "failure probability" },
        ParamSpec { name: "samples", kind: ParamKind::Int { min: 0, max: 100_000_000 }, default: "0", help: "edge draws q; 0 uses the sample count" },
    ],
    run: sparsify_run,
};

/// Standardized deviations above this fail the unbiasedness band. With at
/// most a few thousand edges, a family-wise false alarm needs a 5-sigma
/// event somewhere, which has probability below 1e-3.
const BAND_Z: f64 = 5.0;

fn sparsify_run(ctx: &Ctx, body: &mut ReportBody) -> Result<()> {
    let l = load_laplacian(ctx)?;
    let n = l.dimension();
    let eps = ctx.params.real("eps")?;
    let delta = ctx.params.real("delta")?;
    let q = match ctx.params.usize("samples")? {
        0 => sparsifier_sample_count(n, eps, delta)?,
        q => q,
    };
    let edges = l.graph().edges().to_vec();
    let rho = l.effective_resistances()?.to_vec();
    let index: HashMap<(usize, usize), usize> = edges.iter().enumerate().map(|(k, e)| ((e.i, e.j), k)).collect();

    let results = ctx.run_trials(|_, rng| {
        let s = sparsify(&l, q, rng)?;
        let lhat = s.graph.laplacian_matrix();
        let ok = spectral_equivalence(&l, &lhat, eps)?;
        let (lo, hi) = l.relative_spectrum(&lhat)?;
        let mut weights = vec![0.0; edges.len()];
        for e in s.graph.edges() {
            weights[index[&(e.i, e.j)]] = e.w;
        }
        let row = vec![
            ("equivalent", f64::from(u8::from(ok))),
            ("lambda_min", lo),
            ("lambda_max", hi),
            ("edges", s.graph.edge_count() as f64),
            ("connected", f64::from(u8::from(s.connected))),
        ];
        Ok((row, weights))
    })?;
    let (rows, weights): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    body.push_trials(rows);

    let foster: f64 = edges.iter().zip(&rho).map(|(e, r)| e.w * r).sum();
    body.bound("foster_sum", foster, "sum of w_ij rho_ij equals n - 1");
    body.check("foster_identity", (foster - (n - 1) as f64).abs(), Relation::AtMost, 1e-8, "sum w rho = n - 1");
    body.bound("q", q as f64, SPARSIFY_ANCHOR);
    body.bound("edges_original", edges.len() as f64, "edges in the input graph");
    aggregate_columns(body, &["edges", "lambda_min", "lambda_max"]);
    let trials = body.trials.len();
    let failures = body.column("equivalent").iter().filter(|&&x| x < 0.5).count();
    check_tail_at_most(body, "failure", failures, trials, 0.5, delta, "fraction of samples that are not eps-equivalent");

    // per-edge unbiasedness: weight = (n-1)/(q rho) * Binomial(q, w rho/(n-1))
    let mut worst: f64 = 0.0;
    let mut outside = 0;
    for (k, e) in edges.iter().enumerate() {
        let mean = weights.iter().map(|w| w[k]).sum::<f64>() / trials as f64;
        let p = e.w * rho[k] / (n - 1) as f64;
        let unit = (n - 1) as f64 / (q as f64 * rho[k]);
        let se = unit * (q as f64 * p * (1.0 - p)).sqrt() / (trials as f64).sqrt();
        let z = if se > 0.0 { (mean - e.w).abs() / se } else if (mean - e.w).abs() <= 1e-12 * e.w { 0.0 } else { f64::INFINITY };
        worst = worst.max(z);
        outside += usize::from(z > 3.0);
    }
    // a 3-sigma band misses with probability 0.0027 per edge
    let nominal = 0.0027;
    let m = edges.len();
    let frac = outside as f64 / m as f64;
    body.check(
        "outside_3sigma_band_fraction",
        frac,
        Relation::AtMost,
        nominal + 3.0 * binomial_sigma(nominal, m),
        "share of edges whose mean weight leaves its 3-sigma band",
    );
    body.check("mean_weight_max_z", worst, Relation::AtMost, BAND_Z, "largest standardized gap between mean sampled and true edge weight");
    Ok(())
}

pub const SPARSE_CHOLESKY: Experiment = Experiment {
    name: "sparse-cholesky",
    anchor: "randomized sparse Cholesky: eliminations with sampled cliques give CC* spectrally close to L",
    summary: "Relative spectrum of CC* for the sampled elimination, and exactness of the unsampled one",
    default_trials: 100,
    params: &[
        ParamSpec { name: "graph", kind: ParamKind::Text, default: "complete:30", help: GRAPH_HELP },
        ParamSpec { name: "lower", kind: ParamKind::Real { min: 0.0, max: 1.0 }, default: "0.5", help: "required a in a L <= CC*" },
        ParamSpec { name: "upper", kind: ParamKind::Real { min: 1.0, max: 100.0 }, default: "1.5", help: "required b in CC* <= b L" },
        ParamSpec { name: "target", kind: ParamKind::Real { min: 0.0, max: 1.0 }, default: "0.8", help: "required success fraction" },
    ],
    run: sparse_cholesky_run,
};

fn sparse_cholesky_run(ctx: &Ctx, body: &mut ReportBody) -> Result<()> {
    let l = load_laplacian(ctx)?;
    let (lower, upper) = (ctx.params.real("lower")?, ctx.params.real("upper")?);
    let target = ctx.params.real("target")?;

    let rows = ctx.run_trials(|_, rng| {
        let exact = sparse_cholesky(&l, rng, true)?;
        let exact_err = exact.reconstruct().max_abs_diff(l.matrix());
        let sampled = sparse_cholesky(&l, rng, false)?;
        let (lo, hi) = l.relative_spectrum(&sampled.reconstruct())?;
        let fill = sampled.c.as_slice().iter().filter(|z| z.norm() > 0.0).count();
        Ok(vec![
            ("exact_error", exact_err),
            ("lambda_min", lo),
            ("lambda_max", hi),
            ("success", f64::from(u8::from(lo >= lower && hi <= upper))),
            ("factor_nonzeros", fill as f64),
        ])
    })?;
    body.push_trials(rows);

    let xs = body.column("exact_error");
    let err = body.aggregate("exact_error", &xs);
    body.check("exact_mode_error", err.max, Relation::AtMost, 1e-8, "exact elimination reproduces L");
    aggregate_columns(body, &["lambda_min", "lambda_max", "factor_nonzeros"]);
    body.bound("laplacian_nonzeros", l.matrix().as_slice().iter().filter(|z| z.norm() > 0.0).count() as f64, "nonzeros of L");
    let ok = body.column("success");
    let k = ok.iter().filter(|&&x| x > 0.5).count();
    let t = body.tail_count("success", k, ok.len(), 1.0);
    body.check("success_fraction", t.fraction, Relation::AtLeast, target, "runs with lower L <= CC* <= upper L (empirical target)");
    Ok(())
}

pub const LAPLACIAN_SOLVE: Experiment = Experiment {
    name: "laplacian-solve",
    anchor: "preconditioned conjugate gradient with a sparse Cholesky preconditioner solves Laplacian systems in few iterations",
    summary: "PCG iteration counts with exact and sampled Cholesky preconditioners",
    default_trials: 100,
    params: &[
        ParamSpec { name: "graph", kind: ParamKind::Text, default: "complete:30", help: GRAPH_HELP },
        ParamSpec { name: "tol", kind: ParamKind::Real { min: 1e-15, max: 1.0 }, default: "1e-8", help: "relative residual target" },
        ParamSpec { name: "maxit", kind: ParamKind::Int { min: 1, max: 100_000 }, default: "50", help: "iteration cap with a sampled preconditioner" },
        ParamSpec { name: "lower", kind: ParamKind::Real { min: 0.0, max: 1.0 }, default: "0.5", help: "success band for the preconditioner" },
        ParamSpec { name: "upper", kind: ParamKind::Real { min: 1.0, max: 100.0 }, default: "1.5", help: "success band for the preconditioner" },
    ],
    run: laplacian_solve_run,
};

/// Iterations used and whether the tolerance was met.
fn solve_stats(result: std::result::Result<mclab_core::graphs::PcgSolution, GraphError>) -> Result<(f64, f64, bool)> {
    match result {
        Ok(s) => Ok((s.iterations as f64, s.relative_residual, true)),
        Err(GraphError::MaxIterations(s)) => Ok((s.iterations as f64, s.relative_residual, false)),
        Err(e) => Err(e.into()),
    }
}

fn laplacian_solve_run(ctx: &Ctx, body: &mut ReportBody) -> Result<()> {
    let l = load_laplacian(ctx)?;
    let n = l.dimension();
    let tol = ctx.params.real("tol")?;
    let maxit = ctx.params.usize("maxit")?;
    let (lower, upper) = (ctx.params.real("lower")?, ctx.params.real("upper")?);

    let rows = ctx.run_trials(|_, rng| {
        let mut f: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mean = f.iter().sum::<f64>() / n as f64;
        f.iter_mut().for_each(|x| *x -= mean);

        let exact = sparse_cholesky(&l, rng, true)?;
        let (exact_it, _, _) = solve_stats(pcg_solve(&l, Some(&exact), &f, tol, maxit))?;
        let sampled = sparse_cholesky(&l, rng, false)?;
        let (lo, hi) = l.relative_spectrum(&sampled.reconstruct())?;
        let (it, res, converged) = solve_stats(pcg_solve(&l, Some(&sampled), &f, tol, maxit))?;
        let (plain_it, _, _) = solve_stats(pcg_solve(&l, None, &f, tol, 10 * n))?;
        Ok(vec![
            ("exact_iterations", exact_it),
            ("preconditioner_ok", f64::from(u8::from(lo >= lower && hi <= upper))),
            ("iterations", it),
            ("relative_residual", res),
            ("converged", f64::from(u8::from(converged))),
            ("plain_iterations", plain_it),
        ])
    })?;
    body.push_trials(rows);

    let xs = body.column("exact_iterations");
    let ex = body.aggregate("exact_iterations", &xs);
    body.check("exact_preconditioner_iterations", ex.max, Relation::AtMost, 2.0, "exact factor solves in at most 2 steps");
    aggregate_columns(body, &["iterations", "plain_iterations"]);
    let good: Vec<bool> = body
        .trials
        .iter()
        .filter(|r| r.get("preconditioner_ok") == Some(1.0))
        .map(|r| r.get("converged") == Some(1.0))
        .collect();
    let misses = good.iter().filter(|&&c| !c).count();
    body.tail_count("unconverged_with_good_preconditioner", misses, good.len(), 1.0);
    body.check(
        "unconverged_with_good_preconditioner",
        misses as f64,
        Relation::AtMost,
        0.0,
        "every run with a good sampled preconditioner reaches tol within maxit",
    );
    let p = good.len() as f64 / body.trials.len() as f64;
    body.bound("good_preconditioner_fraction", p, "share of runs with lower L <= CC* <= upper L");
    Ok(())
}
