//! The experiment registry. Each experiment draws its trials from
//! independent streams and fills a [`ReportBody`].

mod concentration;
mod estimation;
mod graphs;
mod quantum;
mod rounding;

use rayon::prelude::*;

use mclab_core::concentration::binomial_sigma;
use mclab_core::rng::{stream, TrialRng};

use crate::error::Result;
use crate::params::{ParamSpec, Params};
use crate::report::{Relation, ReportBody};

pub struct Experiment {
    pub name: &'static str,
    /// The statement the experiment checks.
    pub anchor: &'static str,
    pub summary: &'static str,
    pub default_trials: u64,
    pub params: &'static [ParamSpec],
    pub(crate) run: fn(&Ctx, &mut ReportBody) -> Result<()>,
}

/// Stream indices at or above this value seed setup draws, never trials.
const SETUP_STREAM: u64 = 1 << 63;

pub struct Ctx {
    pub params: Params,
    pub seed: u64,
    pub trials: u64,
}

impl Ctx {
    /// Runs `f(index, rng)` for every trial, possibly in parallel, and
    /// returns the results in index order. The first error by index wins.
    pub fn run_trials<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, &mut TrialRng) -> Result<T> + Sync,
    {
        let results: Vec<Result<T>> = (0..self.trials)
            .into_par_iter()
            .map(|i| f(i, &mut stream(self.seed, i)))
            .collect();
        results.into_iter().collect()
    }

    /// Generator for setup draw `k` (fixtures, test states), disjoint from all trials.
    pub fn setup_rng(&self, k: u64) -> TrialRng {
        stream(self.seed, SETUP_STREAM + k)
    }
}

/// Aggregates each named trial column under its own name.
fn aggregate_columns(body: &mut ReportBody, keys: &[&str]) {
    for key in keys {
        let xs = body.column(key);
        body.aggregate(key, &xs);
    }
}

/// Gate `mean <= bound` with a three-standard-error margin.
fn check_mean_at_most(body: &mut ReportBody, name: &str, xs: &[f64], bound: f64, detail: &str) -> bool {
    let a = body.aggregate(name, xs);
    body.check(&format!("{name}_mean"), a.mean, Relation::AtMost, bound + 3.0 * a.se, detail)
}

/// Gate an empirical exceedance probability against `p` plus three binomial sigmas at `p`.
fn check_tail_at_most(body: &mut ReportBody, name: &str, exceed: usize, n: usize, threshold: f64, p: f64, detail: &str) -> bool {
    let t = body.tail_count(name, exceed, n, threshold);
    let p = p.min(1.0);
    body.check(&format!("{name}_probability"), t.fraction, Relation::AtMost, p + 3.0 * binomial_sigma(p, n), detail)
}

static REGISTRY: &[Experiment] = &[
    concentration::BERNSTEIN_DIAG,
    concentration::BERNSTEIN_GINIBRE,
    concentration::KHINCHIN_GINIBRE,
    estimation::ACTIVE_SUBSPACE,
    rounding::SR_ROUND,
    rounding::SR_CHOLESKY,
    graphs::SPARSIFY,
    graphs::SPARSE_CHOLESKY,
    graphs::LAPLACIAN_SOLVE,
    quantum::TOMOGRAPHY,
    estimation::COVARIANCE_SEQ,
    quantum::TROTTER,
];

pub fn list_experiments() -> &'static [Experiment] {
    REGISTRY
}

pub fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}
