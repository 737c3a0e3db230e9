//! Weighted graphs, their Laplacians, and randomized approximations of them.
//!
//! A [`Laplacian`] caches the whitening map `W = V_r diag(lambda_r^{-1/2})`
//! onto the range of `L`. Effective resistances are squared row distances
//! of `W`, and spectral equivalence of `Lhat` is read off the spectrum of
//! `W* Lhat W`.

mod cholesky;
mod io;
mod pcg;

use std::sync::OnceLock;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{eigh, LinalgError, Matrix, DEFAULT_RANK_TOL};

pub use cholesky::{clique_sample, sparse_cholesky, SparseCholesky};
pub use io::{from_text, read_graph, to_text, write_graph};
pub use pcg::{energy_seminorm, pcg_solve, PcgSolution};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph needs at least one vertex")]
    Empty,
    #[error("edge ({i}, {j}) invalid for {n} vertices (need i < j < n)")]
    InvalidEdge { i: usize, j: usize, n: usize },
    #[error("edge ({i}, {j}) has non-positive or non-finite weight {w}")]
    BadWeight { i: usize, j: usize, w: f64 },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("star has {0} neighbors; at least 2 are needed")]
    DegenerateStar(usize),
    #[error("pivot {pivot:e} at elimination step {step} is numerically zero")]
    ZeroPivot { step: usize, pivot: f64 },
    #[error("right-hand side is not orthogonal to the all-ones vector (sum {sum:e})")]
    NotBalanced { sum: f64 },
    #[error("PCG stopped after {} iterations at relative residual {:e}", .0.iterations, .0.relative_residual)]
    MaxIterations(Box<PcgSolution>),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected graph on vertices `0..n` with positive edge weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Checks `i < j < n`, positive finite weights, and no repeated pairs.
    /// Connectivity is a separate question; see [`is_connected`](Self::is_connected).
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for e in &edges {
            if !(e.i < e.j && e.j < n) {
                return Err(GraphError::InvalidEdge { i: e.i, j: e.j, n });
            }
            if !(e.w > 0.0 && e.w.is_finite()) {
                return Err(GraphError::BadWeight { i: e.i, j: e.j, w: e.w });
            }
            if !seen.insert((e.i, e.j)) {
                return Err(GraphError::DuplicateEdge(e.i, e.j));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn from_triples(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        Self::new(n, triples.iter().map(|&(i, j, w)| Edge { i, j, w }).collect())
    }

    /// Unit-weight complete graph.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| Edge { i, j, w: 1.0 }))
            .collect();
        Self { n, edges }
    }

    /// Unit-weight path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        let edges = (1..n).map(|j| Edge { i: j - 1, j, w: 1.0 }).collect();
        Self { n, edges }
    }

    /// Erdos-Renyi `G(n, p)` with unit weights, redrawn until connected.
    pub fn gnp_connected<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) || n == 0 {
            return Err(GraphError::InvalidParameter(format!("G({n}, {p})")));
        }
        loop {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < p {
                        edges.push(Edge { i, j, w: 1.0 });
                    }
                }
            }
            let g = Self { n, edges };
            if g.is_connected() {
                return Ok(g);
            }
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_connected(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut components = self.n;
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }

    /// `sum_{i<j} w_ij (e_i - e_j)(e_i - e_j)*`, with no connectivity requirement.
    pub fn laplacian_matrix(&self) -> Matrix {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for e in &self.edges {
            m[e.i * n + e.i] += e.w;
            m[e.j * n + e.j] += e.w;
            m[e.i * n + e.j] -= e.w;
            m[e.j * n + e.i] -= e.w;
        }
        Matrix::from_real(n, n, &m).expect("finite weights")
    }
}

/// Laplacian of a connected graph, with lazily computed spectral data.
#[derive(Clone, Debug)]
pub struct Laplacian {
    graph: WeightedGraph,
    matrix: Matrix,
    whitener: OnceLock<Matrix>,
    resistances: OnceLock<Vec<f64>>,
}

/// Laplacian of a connected graph.
pub fn laplacian(g: &WeightedGraph) -> Result<Laplacian> {
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    Ok(Laplacian {
        graph: g.clone(),
        matrix: g.laplacian_matrix(),
        whitener: OnceLock::new(),
        resistances: OnceLock::new(),
    })
}

impl Laplacian {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn dimension(&self) -> usize {
        self.graph.n
    }

    /// `n x r` map `V_r diag(lambda_r^{-1/2})` onto the range of `L`, keeping
    /// eigenvalues above `DEFAULT_RANK_TOL * lambda_max`.
    pub fn whitener(&self) -> Result<&Matrix> {
        if let Some(w) = self.whitener.get() {
            return Ok(w);
        }
        let e = eigh(&self.matrix)?;
        let cutoff = DEFAULT_RANK_TOL * e.lambda_max();
        let keep: Vec<usize> = (0..e.dimension())
            .filter(|&k| e.eigenvalues()[k] > cutoff)
            .collect();
        let n = self.dimension();
        let v = e.eigenvectors();
        let w = if keep.is_empty() {
            Matrix::zeros(n, 1)
        } else {
            Matrix::from_fn(n, keep.len(), |i, c| {
                v[(i, keep[c])] / e.eigenvalues()[keep[c]].sqrt()
            })
        };
        Ok(self.whitener.get_or_init(|| w))
    }

    /// Effective resistance of every edge, aligned with `graph().edges()`.
    pub fn effective_resistances(&self) -> Result<&[f64]> {
        if let Some(r) = self.resistances.get() {
            return Ok(r);
        }
        let w = self.whitener()?;
        let rho = self
            .graph
            .edges
            .iter()
            .map(|e| {
                (0..w.cols())
                    .map(|k| (w[(e.i, k)] - w[(e.j, k)]).norm_sqr())
                    .sum()
            })
            .collect();
        Ok(self.resistances.get_or_init(|| rho))
    }

    /// `(lambda_min, lambda_max)` of `W* M W`: the tightest `a, b` with
    /// `a L <= M <= b L` on the range of `L`.
    pub fn relative_spectrum(&self, m: &Matrix) -> Result<(f64, f64)> {
        let n = self.dimension();
        if m.dims() != (n, n) {
            return Err(GraphError::DimensionMismatch {
                expected: n,
                found: m.rows(),
            });
        }
        let w = self.whitener()?;
        let core = &(&w.adjoint() * m) * w;
        let e = eigh(&core.hermitian_part())?;
        Ok((e.lambda_min(), e.lambda_max()))
    }
}

/// Free-function form of [`Laplacian::effective_resistances`].
pub fn effective_resistances(l: &Laplacian) -> Result<Vec<f64>> {
    Ok(l.effective_resistances()?.to_vec())
}

/// `ceil(3 eps^-2 n log(2n / delta))` edge samples.
pub fn sparsifier_sample_count(n: usize, eps: f64, delta: f64) -> Result<usize> {
    if !(eps > 0.0 && eps <= 1.0) || !(delta > 0.0 && delta < 1.0) || n == 0 {
        return Err(GraphError::InvalidParameter(format!(
            "need n >= 1, eps in (0, 1], delta in (0, 1); got n={n}, eps={eps}, delta={delta}"
        )));
    }
    let n = n as f64;
    Ok((3.0 / (eps * eps) * n * (2.0 * n / delta).ln()).ceil() as usize)
}

#[derive(Clone, Debug)]
pub struct Sparsified {
    pub graph: WeightedGraph,
    /// Whether the sampled graph is connected; a disconnected sample cannot
    /// be spectrally equivalent.
    pub connected: bool,
    pub draws: usize,
}

/// Samples `q` edges with probability `w_ij rho_ij / (n - 1)`, each adding
/// weight `(n - 1) / (q rho_ij)`. Repeated edges merge, so the result has at
/// most `q` edges and `E[Lhat] = L`.
pub fn sparsify<R: Rng + ?Sized>(l: &Laplacian, q: usize, rng: &mut R) -> Result<Sparsified> {
    if q == 0 {
        return Err(GraphError::InvalidParameter("q must be positive".into()));
    }
    let n = l.dimension();
    let edges = l.graph.edges();
    if edges.is_empty() {
        return Ok(Sparsified {
            graph: l.graph.clone(),
            connected: n == 1,
            draws: q,
        });
    }
    let rho = l.effective_resistances()?;
    let probs: Vec<f64> = edges
        .iter()
        .zip(rho)
        .map(|(e, &r)| if r > 0.0 { e.w * r } else { 0.0 })
        .collect();
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| GraphError::InvalidParameter(format!("sampling weights: {e}")))?;
    let mut acc = vec![0.0; edges.len()];
    let scale = (n - 1) as f64 / q as f64;
    for _ in 0..q {
        let k = dist.sample(rng);
        acc[k] += scale / rho[k];
    }
    let kept = edges
        .iter()
        .zip(&acc)
        .filter(|(_, &w)| w > 0.0)
        .map(|(e, &w)| Edge { i: e.i, j: e.j, w })
        .collect();
    let graph = WeightedGraph { n, edges: kept };
    Ok(Sparsified {
        connected: graph.is_connected(),
        graph,
        draws: q,
    })
}

/// Whether `(1 - eps) L <= Lhat <= (1 + eps) L`, within `1e-9`, on the range of `L`.
pub fn spectral_equivalence(l: &Laplacian, lhat: &Matrix, eps: f64) -> Result<bool> {
    let (lo, hi) = l.relative_spectrum(lhat)?;
    Ok(lo >= 1.0 - eps - 1e-9 && hi <= 1.0 + eps + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn k3() -> Laplacian {
        laplacian(&WeightedGraph::complete(3)).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(matches!(
            WeightedGraph::from_triples(2, &[(1, 0, 1.0)]),
            Err(GraphError::InvalidEdge { .. })
        ));
        assert!(matches!(
            WeightedGraph::from_triples(2, &[(0, 1, 0.0)]),
            Err(GraphError::BadWeight { .. })
        ));
        assert!(matches!(
            WeightedGraph::from_triples(3, &[(0, 1, 1.0), (0, 1, 2.0)]),
            Err(GraphError::DuplicateEdge(0, 1))
        ));
        let g = WeightedGraph::from_triples(3, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(laplacian(&g), Err(GraphError::Disconnected)));
    }

    #[test]
    fn laplacian_examples() {
        let g = WeightedGraph::from_triples(2, &[(0, 1, 2.5)]).unwrap();
        let l = laplacian(&g).unwrap();
        assert_eq!(l.matrix(), &Matrix::from_rows(&[[2.5, -2.5], [-2.5, 2.5]]));
        assert_eq!(
            k3().matrix(),
            &Matrix::from_rows(&[[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]])
        );
    }

    #[test]
    fn resistance_examples() {
        let single = laplacian(&WeightedGraph::path(2)).unwrap();
        assert!((single.effective_resistances().unwrap()[0] - 1.0).abs() < 1e-12);
        for r in k3().effective_resistances().unwrap() {
            assert!((r - 2.0 / 3.0).abs() < 1e-12);
        }
        let path = laplacian(&WeightedGraph::path(3)).unwrap();
        for r in path.effective_resistances().unwrap() {
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_counts() {
        assert_eq!(sparsifier_sample_count(100, 0.5, 0.1).unwrap(), 9122);
        assert_eq!(sparsifier_sample_count(2, 1.0, 0.5).unwrap(), 13);
        assert!(sparsifier_sample_count(10, 1.5, 0.1).is_err());
        assert!(sparsifier_sample_count(10, 0.5, 1.0).is_err());
    }

    #[test]
    fn single_edge_sparsifies_exactly() {
        let l = laplacian(&WeightedGraph::from_triples(2, &[(0, 1, 3.0)]).unwrap()).unwrap();
        let mut rng = stream(1, 0);
        for q in [1, 7, 100] {
            let s = sparsify(&l, q, &mut rng).unwrap();
            assert!(s.graph.laplacian_matrix().max_abs_diff(l.matrix()) < 1e-12);
            assert!(s.graph.edge_count() <= q);
        }
    }

    #[test]
    fn equivalence_examples() {
        let l = k3();
        let m = l.matrix();
        assert!(spectral_equivalence(&l, m, 1e-6).unwrap());
        assert!(!spectral_equivalence(&l, &m.scale_real(2.0), 0.5).unwrap());
        assert!(spectral_equivalence(&l, &m.scale_real(1.25), 0.3).unwrap());
        assert!(matches!(
            spectral_equivalence(&l, &Matrix::identity(2), 0.5),
            Err(GraphError::DimensionMismatch { .. })
        ));
    }
}
