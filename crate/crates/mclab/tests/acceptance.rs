//! Acceptance suite. Each criterion runs its experiment through the library,
//! then recomputes the decision from the recorded per-trial numbers with
//! the tolerances pinned below. Prints one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use mclab::{run, ExperimentConfig, ExperimentReport};
use mclab_core::graphs::{effective_resistances, laplacian, WeightedGraph};
use mclab_core::linalg::{eigh, hermitian_dilation, singular_values, spectral_norm, Matrix, C64};
use mclab_core::quantum::{builtin_design, reconstruction_defect, single_shot_estimator, DensityMatrix};
use mclab_core::quantum::{trotter_bias, HamiltonianSum};
use mclab_core::rng::stream;
use mclab_core::rounding::{correlation_fixture, sr_cholesky, FloatSystem};

const SEED: u64 = 0;
/// Margin in standard errors for means and binomial proportions.
const SIGMAS: f64 = 3.0;
const FOSTER_TOL: f64 = 1e-8;
const DILATION_TOL: f64 = 1e-9;
const DESIGN_TOL: f64 = 1e-9;
const MEAN_ESTIMATOR_TOL: f64 = 1e-10;
const CHOLESKY_EXACT_TOL: f64 = 1e-12;
const ELIMINATION_EXACT_TOL: f64 = 1e-8;
const TOMOGRAPHY_COMPARISON_SLACK: f64 = 1e-12;
/// Largest standardized per-edge gap allowed between mean sampled and true weights.
const SPARSIFY_BAND_Z: f64 = 5.0;
/// Two-sided miss rate of a 3-sigma band.
const BAND_MISS_RATE: f64 = 0.0027;

type Outcome = Result<String, String>;
/// Name, runtime budget in seconds, check.
type Criterion = (&'static str, f64, fn() -> Outcome);

fn experiment(config: ExperimentConfig) -> Result<ExperimentReport, String> {
    let config = config.seed(SEED);
    run(&config).map_err(|e| format!("{}: {e}", config.experiment))
}

fn column(r: &ExperimentReport, key: &str) -> Result<Vec<f64>, String> {
    r.body
        .trials
        .iter()
        .map(|t| t.get(key).ok_or_else(|| format!("trial {} lacks {key}", t.index)))
        .collect()
}

fn bound(r: &ExperimentReport, name: &str) -> Result<f64, String> {
    r.body
        .bounds
        .iter()
        .find(|b| b.name == name)
        .map(|b| b.value)
        .ok_or_else(|| format!("report lacks bound {name}"))
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

fn fraction(xs: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    xs.iter().filter(|&&x| pred(x)).count() as f64 / xs.len() as f64
}

fn binomial_margin(p: f64, n: usize) -> f64 {
    SIGMAS * (p * (1.0 - p) / n as f64).sqrt()
}

fn require(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn bernstein_expectation() -> Outcome {
    let r = experiment(ExperimentConfig::new("bernstein-diag").param("dim", 32).trials(2000))?;
    let norms = column(&r, "norm")?;
    let l = 64f64.ln();
    let b = (2.0 * l).sqrt() + l / 3.0;
    let (m, se) = mean_se(&norms);
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    require(
        m <= b + SIGMAS * se && min >= 1.0 - 1e-12,
        format!("mean ||S|| = {m:.4} <= {b:.4} + 3se; min ||S|| = {min:.4} >= 1"),
    )
}

fn bernstein_tail() -> Outcome {
    let r = experiment(ExperimentConfig::new("bernstein-diag").param("dim", 32).trials(2000))?;
    let norms = column(&r, "norm")?;
    let mut parts = Vec::new();
    let mut ok = true;
    for t in [1.0f64, 2.0, 3.0, 4.0] {
        let p = fraction(&norms, |x| x >= t);
        let b = (64.0 * (-(t * t / 2.0) / (1.0 + t / 3.0)).exp()).min(1.0);
        ok &= p <= b + binomial_margin(b, norms.len());
        parts.push(format!("t={t}: {p:.3} <= {b:.3}"));
    }
    require(ok, parts.join(", "))
}

fn khinchin() -> Outcome {
    let r = experiment(ExperimentConfig::new("khinchin-ginibre").param("dim", 64).trials(300))?;
    let (m, se) = mean_se(&column(&r, "norm")?);
    let d = 64.0f64;
    let lo = (2.0 * d / std::f64::consts::PI).sqrt();
    let hi = (2.0 * d * (2.0 * d).ln()).sqrt();
    let gap = (m - 2.0 * d.sqrt()).abs() / (2.0 * d.sqrt());
    require(
        m >= lo - SIGMAS * se && m <= hi + SIGMAS * se,
        format!("mean ||G|| = {m:.3} in [{lo:.3}, {hi:.3}]; diagnostic gap to 2 sqrt(d) = {:.1}%", 100.0 * gap),
    )
}

fn active_subspace() -> Outcome {
    let r = experiment(
        ExperimentConfig::new("active-subspace").param("dim", 10).param("model", "quadratic").param("samples", "50,200").trials(500),
    )?;
    let l = bound(&r, "lipschitz")?;
    let s = bound(&r, "sigma_norm")?;
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [50usize, 200] {
        let beta = l * l * 20f64.ln() / (s * n as f64);
        let b = (2.0 * beta).sqrt() + beta / 3.0;
        let (m, se) = mean_se(&column(&r, &format!("rel_error_n{n}"))?);
        ok &= m <= b + SIGMAS * se;
        parts.push(format!("n={n}: {m:.4} <= {b:.4}"));
    }
    require(ok, parts.join(", "))
}

fn stochastic_rounding() -> Outcome {
    let r = experiment(ExperimentConfig::new("sr-round").param("dim", 64).param("precision-bits", 8).trials(500))?;
    let c = r.config.params.real("scale").map_err(|e| e.to_string())?;
    let u = 2f64.powi(-7);
    let l = 128f64.ln();
    // both inputs have every entry of size c: ||A||_rc2 = 8c, ||A||_rc1 = 64c, ||A||_max = c
    let stochastic = u * ((2.0 * (8.0 * c).powi(2) * l).sqrt() + c * l / 3.0);
    let worst = u * 64.0 * c;
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["ones", "signs"] {
        let (m, se) = mean_se(&column(&r, &format!("error_{name}"))?);
        ok &= m <= stochastic + SIGMAS * se && m < worst;
        parts.push(format!("{name}: {m:.4} <= {stochastic:.4}, < {worst:.4}"));
    }
    require(ok, parts.join(", "))
}

fn sparsification() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for graph in ["complete:50", "gnp:50:0.2"] {
        let r = experiment(
            ExperimentConfig::new("sparsify").param("graph", graph).param("eps", 0.5).param("delta", 0.1).trials(100),
        )?;
        let q = bound(&r, "q")?;
        let want_q = (3.0 * 4.0 * 50.0 * 1000f64.ln()).ceil();
        let eq = column(&r, "equivalent")?;
        let fail = fraction(&eq, |x| x < 0.5);
        let z = r.verdict("mean_weight_max_z").ok_or("missing unbiasedness verdict")?.observed;
        let outside = r.verdict("outside_3sigma_band_fraction").ok_or("missing band verdict")?.observed;
        let m = bound(&r, "edges_original")? as usize;
        let band_ok = outside <= BAND_MISS_RATE + binomial_margin(BAND_MISS_RATE, m);
        ok &= q == want_q && fail <= 0.1 + binomial_margin(0.1, eq.len()) && z <= SPARSIFY_BAND_Z && band_ok;
        parts.push(format!("{graph}: q={q}, failures {fail:.2}, outside 3-sigma bands {outside:.4}, max |z| {z:.2}"));
    }
    require(ok, parts.join("; "))
}

fn tomography() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (state, rank) in [("mixed", 2.0), ("basis:0", 1.0), ("random:7", 1.0)] {
        let r = experiment(
            ExperimentConfig::new("tomography")
                .param("design", "mub2")
                .param("state", state)
                .param("eps", 0.5)
                .param("delta", 0.1)
                .param("samples", 148)
                .trials(500),
        )?;
        let dev = column(&r, "deviation")?;
        let trace = column(&r, "trace_error")?;
        let p = fraction(&dev, |x| x >= 0.5);
        let holds = dev.iter().zip(&trace).all(|(d, t)| *t <= 4.0 * rank * d + TOMOGRAPHY_COMPARISON_SLACK);
        ok &= p <= 0.1 + binomial_margin(0.1, dev.len()) && holds;
        parts.push(format!("{state}: P = {p:.3}, comparison {}", if holds { "holds" } else { "broken" }));
    }
    require(ok, parts.join("; "))
}

fn uniform_covariance() -> Outcome {
    let r = experiment(
        ExperimentConfig::new("covariance-seq").param("model", "axis").param("dim", 4).param("delta", 0.1).param("horizon", 2048).trials(400),
    )?;
    let cov = column(&r, "covered")?;
    let f = fraction(&cov, |x| x > 0.5);
    let floor = 0.9 - binomial_margin(0.9, cov.len());
    require(f >= floor, format!("coverage {f:.3} >= {floor:.3}"))
}

fn sr_cholesky_tail() -> Outcome {
    let r = experiment(
        ExperimentConfig::new("sr-cholesky").param("dim", 16).param("precision-bits", 8).param("delta", 0.1).trials(500),
    )?;
    let norm_a = bound(&r, "norm_a")?;
    let u = 2f64.powi(-7);
    let t = (32.0f64 / 0.1).ln();
    let threshold = u * (2.0 * (16.0 * norm_a * t).sqrt() + t / 3.0);
    let err = column(&r, "error")?;
    let flagged = column(&r, "flagged")?;
    let kept: Vec<f64> = err.iter().zip(&flagged).filter(|(_, f)| **f < 0.5).map(|(e, _)| *e).collect();
    let p = fraction(&kept, |x| x >= threshold);

    let seed = r.config.params.int("fixture-seed").map_err(|e| e.to_string())? as u64;
    let a = correlation_fixture(16, &FloatSystem::new(8).map_err(|e| e.to_string())?, seed).map_err(|e| e.to_string())?;
    let exact = sr_cholesky(&FloatSystem::exact(), &a, &mut stream(SEED, 0)).map_err(|e| e.to_string())?;
    let exact_err = spectral_norm(&exact.error).map_err(|e| e.to_string())?;
    require(
        kept.len() == 500 && p <= 0.1 + binomial_margin(0.1, kept.len()) && exact_err <= CHOLESKY_EXACT_TOL,
        format!("{} unflagged, P{{err >= {threshold:.4}}} = {p:.3}; exact mode error {exact_err:.1e}", kept.len()),
    )
}

fn sparse_cholesky_pcg() -> Outcome {
    let c = experiment(ExperimentConfig::new("sparse-cholesky").param("graph", "complete:30").trials(100))?;
    let exact = column(&c, "exact_error")?.into_iter().fold(0.0, f64::max);
    let lo = column(&c, "lambda_min")?;
    let hi = column(&c, "lambda_max")?;
    let success = lo.iter().zip(&hi).filter(|(a, b)| **a >= 0.5 && **b <= 1.5).count() as f64 / lo.len() as f64;

    let s = experiment(
        ExperimentConfig::new("laplacian-solve").param("graph", "complete:30").param("tol", 1e-8).param("maxit", 50).trials(100),
    )?;
    let exact_it = column(&s, "exact_iterations")?.into_iter().fold(0.0, f64::max);
    let good = column(&s, "preconditioner_ok")?;
    let it = column(&s, "iterations")?;
    let res = column(&s, "relative_residual")?;
    let solved = good
        .iter()
        .zip(it.iter().zip(&res))
        .filter(|(g, _)| **g > 0.5)
        .all(|(_, (i, r))| *i <= 50.0 && *r <= 1e-8);
    require(
        exact <= ELIMINATION_EXACT_TOL && exact_it <= 2.0 && success >= 0.8 && solved,
        format!(
            "exact error {exact:.1e}, exact PCG <= {exact_it} its, success {success:.2}, sampled PCG {}",
            if solved { "converged on all good runs" } else { "missed tol" }
        ),
    )
}

fn product_formulas() -> Outcome {
    let r = experiment(ExperimentConfig::new("trotter").param("dim", 2).param("eps", 1.0).param("delta", 0.2).trials(200))?;
    let n = bound(&r, "steps")?;
    let want_n = (40.0 * 4.0 * 20f64.ln()).ceil();
    let errs = column(&r, "channel_error")?;
    let p = fraction(&errs, |x| x >= 2.0);
    let h = HamiltonianSum::pauli_xz(1).map_err(|e| e.to_string())?;
    let mut ok = n == want_n && p <= 0.2 + binomial_margin(0.2, errs.len());
    for m in [10usize, 100, 1000] {
        let b = trotter_bias(&h, m).map_err(|e| e.to_string())?;
        let mf = m as f64;
        ok &= b.bias <= 4.0 / mf && b.per_factor_gap <= (2.0 / mf).powi(2);
    }
    require(ok, format!("n = {n}, P{{channel error >= 2}} = {p:.3}; bias and gap within L^2/n, (L/n)^2 at n = 10, 100, 1000"))
}

fn structural_identities() -> Outcome {
    let mut rng = stream(SEED, 1 << 62);
    let graphs = vec![
        WeightedGraph::complete(50),
        WeightedGraph::complete(30),
        WeightedGraph::path(20),
        WeightedGraph::gnp_connected(50, 0.2, &mut stream(0, 0)).map_err(|x| x.to_string())?,
        WeightedGraph::from_triples(4, &[(0, 1, 2.0), (1, 2, 0.5), (2, 3, 3.0), (0, 3, 1.0)]).map_err(|x| x.to_string())?,
    ];
    let mut foster: f64 = 0.0;
    for g in &graphs {
        let l = laplacian(g).map_err(|x| x.to_string())?;
        let rho = effective_resistances(&l).map_err(|x| x.to_string())?;
        let s: f64 = g.edges().iter().zip(&rho).map(|(e, r)| e.w * r).sum();
        foster = foster.max((s - (g.vertex_count() - 1) as f64).abs());
    }

    use rand::Rng;
    let mut dilation: f64 = 0.0;
    for (m, n) in [(3, 5), (4, 4), (6, 2)] {
        let a = Matrix::from_fn(m, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let mut want: Vec<f64> = singular_values(&a).map_err(|x| x.to_string())?;
        want.resize(m.min(n), 0.0);
        let mut spectrum: Vec<f64> = want.iter().flat_map(|s| [*s, -*s]).collect();
        spectrum.resize(m + n, 0.0);
        spectrum.sort_by(f64::total_cmp);
        let got = eigh(&hermitian_dilation(&a)).map_err(|x| x.to_string())?;
        for (x, y) in got.eigenvalues().iter().zip(&spectrum) {
            dilation = dilation.max((x - y).abs());
        }
    }

    let design = builtin_design("mub2").map_err(|x| x.to_string())?;
    let defect = reconstruction_defect(&design);
    let mut mean_gap: f64 = 0.0;
    let states = [DensityMatrix::maximally_mixed(2), DensityMatrix::basis(2, 1), DensityMatrix::random_pure(2, &mut rng)];
    for rho in &states {
        let mut acc = Matrix::zeros(2, 2);
        for j in 0..design.len() {
            let p = (&design.projector(j).scale_real(2.0 / design.len() as f64) * rho.matrix()).trace().re;
            acc = &acc + &single_shot_estimator(&design, j).scale_real(p);
        }
        mean_gap = mean_gap.max(acc.max_abs_diff(rho.matrix()));
    }
    require(
        foster <= FOSTER_TOL && dilation <= DILATION_TOL && defect <= DESIGN_TOL && mean_gap <= MEAN_ESTIMATOR_TOL,
        format!("Foster {foster:.1e}, dilation {dilation:.1e}, design {defect:.1e}, E[Y] - rho {mean_gap:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("bernstein expectation", 10.0, bernstein_expectation),
        ("bernstein tail", 10.0, bernstein_tail),
        ("khinchin bracket", 60.0, khinchin),
        ("active subspaces", 30.0, active_subspace),
        ("stochastic rounding", 30.0, stochastic_rounding),
        ("graph sparsification", 60.0, sparsification),
        ("tomography", 30.0, tomography),
        ("uniform covariance", 60.0, uniform_covariance),
        ("sr-cholesky", 30.0, sr_cholesky_tail),
        ("sparse cholesky + pcg", 120.0, sparse_cholesky_pcg),
        ("random product formulas", 60.0, product_formulas),
        ("structural identities", 10.0, structural_identities),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (ok, msg) = match outcome {
            Ok(m) if secs < *budget => (true, m),
            Ok(m) => (false, format!("{m} (over the {budget} s budget)")),
            Err(m) => (false, m),
        };
        failed += usize::from(!ok);
        println!("{} {:>2} {name}: {msg} [{secs:.2} s]", if ok { "PASS" } else { "FAIL" }, k + 1);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
