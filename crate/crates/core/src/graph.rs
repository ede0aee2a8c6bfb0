//! KNN graph and hypergraph construction plus the symmetric normalized
//! propagation operators built from them.
//!
//! Neighbor search is exact (all pairs). Feature rows are scanned through
//! their nonzero support, so the binary bag-of-words matrices the pipeline
//! feeds in cost far less than their dense shape suggests, and genuinely
//! dense inputs fall back to the same code path.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::support::Supports;
use crate::tensor::{DenseMatrix, SparseMatrix};

/// Distance used for neighbor search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Cosine,
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Invalid(format!(
                "unknown metric '{other}' (expected euclidean or cosine)"
            ))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Euclidean => write!(f, "euclidean"),
            Metric::Cosine => write!(f, "cosine"),
        }
    }
}

/// Neighbor-search configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnConfig {
    /// Number of neighbors per vertex; must satisfy `1 <= k < n`.
    pub k: usize,
    pub metric: Metric,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: 5,
            metric: Metric::Euclidean,
        }
    }
}

/// Vertex/hyperedge incidence structure with per-hyperedge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    incidence: SparseMatrix,
    edge_weights: Vec<f64>,
}

impl Hypergraph {
    /// Validates and wraps an incidence matrix: entries must be exactly 0/1
    /// (zeros unstored), every hyperedge non-empty, every vertex in at least
    /// one hyperedge, every weight positive.
    pub fn new(incidence: SparseMatrix, edge_weights: Vec<f64>) -> Result<Self> {
        if edge_weights.len() != incidence.cols() {
            return Err(Error::Invalid(format!(
                "{} weights for {} hyperedges",
                edge_weights.len(),
                incidence.cols()
            )));
        }
        if let Some(w) = edge_weights.iter().find(|&&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Invalid(format!("hyperedge weight {w} must be > 0")));
        }
        if incidence.values().iter().any(|&v| v != 1.0) {
            return Err(Error::Invalid(
                "incidence matrix entries must be exactly 0 or 1".into(),
            ));
        }
        if let Some(v) = incidence.row_sums().iter().position(|&s| s < 1.0) {
            return Err(Error::Invalid(format!("vertex {v} is in no hyperedge")));
        }
        if let Some(e) = incidence.col_sums().iter().position(|&s| s < 1.0) {
            return Err(Error::Invalid(format!("hyperedge {e} is empty")));
        }
        Ok(Hypergraph {
            incidence,
            edge_weights,
        })
    }

    /// Hypergraph whose hyperedge `j` is the closed neighborhood of vertex
    /// `j` in the given adjacency (all weights 1). This is the structure the
    /// KNN construction produces, generalized to any symmetric graph.
    pub fn from_adjacency(adjacency: &SparseMatrix) -> Result<Self> {
        validate_adjacency(adjacency)?;
        let n = adjacency.rows();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let (cols, _) = adjacency.row(i);
            rows.push(insert_sorted(cols, i));
        }
        let incidence = binary_csr(n, n, rows);
        Hypergraph::new(incidence, vec![1.0; n])
    }

    /// Vertex-by-hyperedge incidence matrix.
    pub fn incidence(&self) -> &SparseMatrix {
        &self.incidence
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.incidence.rows()
    }

    /// Number of hyperedges.
    pub fn edge_count(&self) -> usize {
        self.incidence.cols()
    }
}

/// Distance from a scattered row `i` to row `j` under the configured metric.
#[inline]
fn support_distance(s: &Supports, scratch: &[f64], i: usize, j: usize, metric: Metric) -> f64 {
    match metric {
        Metric::Euclidean => s.sq_dist_via_scratch(scratch, i, j),
        Metric::Cosine => {
            let denom = s.sq_norms[i] * s.sq_norms[j];
            if denom == 0.0 {
                1.0
            } else {
                1.0 - s.dot_with_scratch(scratch, j) / denom.sqrt()
            }
        }
    }
}

/// Exhaustive k-nearest-neighbor sets, self excluded, ties broken by lower
/// index. Returned lists are sorted by vertex index.
fn knn_sets(x: &DenseMatrix, cfg: &KnnConfig) -> Result<Vec<Vec<usize>>> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::Invalid(format!(
            "neighbor search needs at least 2 points, got {n}"
        )));
    }
    if cfg.k == 0 || cfg.k >= n {
        return Err(Error::Invalid(format!(
            "k = {} out of range: need 1 <= k < n = {n}",
            cfg.k
        )));
    }
    let supports = Supports::build(x);
    let k = cfg.k;
    let metric = cfg.metric;
    let sets: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; supports.cols],
            |scratch, i| {
                supports.scatter(i, scratch);
                let mut cand: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (support_distance(&supports, scratch, i, j, metric), j))
                    .collect();
                // Lexicographic (distance, index): deterministic tie-break.
                cand.select_nth_unstable_by(k - 1, |a, b| {
                    a.partial_cmp(b).expect("distances are finite")
                });
                let mut ids: Vec<usize> = cand[..k].iter().map(|&(_, j)| j).collect();
                ids.sort_unstable();
                supports.clear(i, scratch);
                ids
            },
        )
        .collect();
    Ok(sets)
}

/// Symmetrized neighbor lists: `j` is adjacent to `i` when either is in the
/// other's KNN set.
fn symmetrize(sets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = sets.len();
    let mut nbr: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, set) in sets.iter().enumerate() {
        for &j in set {
            nbr[i].push(j);
            nbr[j].push(i);
        }
    }
    for row in &mut nbr {
        row.sort_unstable();
        row.dedup();
    }
    nbr
}

fn binary_csr(rows: usize, cols: usize, data: Vec<Vec<usize>>) -> SparseMatrix {
    let rows_with_values = data
        .into_iter()
        .map(|r| r.into_iter().map(|c| (c, 1.0)).collect())
        .collect();
    SparseMatrix::from_sorted_rows(rows, cols, rows_with_values)
}

fn insert_sorted(sorted: &[usize], v: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(sorted.len() + 1);
    let pos = sorted.partition_point(|&c| c < v);
    out.extend_from_slice(&sorted[..pos]);
    if sorted.get(pos) != Some(&v) {
        out.push(v);
    }
    out.extend_from_slice(&sorted[pos..]);
    out
}

/// Symmetric binary KNN adjacency: edge `(i, j)` present iff `i` is among
/// the k nearest neighbors of `j` or vice versa. Zero diagonal; every vertex
/// ends with degree at least `k`.
pub fn knn_graph(x: &DenseMatrix, cfg: &KnnConfig) -> Result<SparseMatrix> {
    let sets = knn_sets(x, cfg)?;
    let nbr = symmetrize(&sets);
    Ok(binary_csr(x.rows(), x.rows(), nbr))
}

/// KNN hypergraph with one hyperedge per vertex: hyperedge `j` contains `j`
/// itself plus every vertex adjacent to `j` under the symmetrized KNN rule.
/// All hyperedge weights are 1.
pub fn knn_hypergraph(x: &DenseMatrix, cfg: &KnnConfig) -> Result<Hypergraph> {
    let sets = knn_sets(x, cfg)?;
    let nbr = symmetrize(&sets);
    let n = x.rows();
    let rows: Vec<Vec<usize>> = nbr
        .iter()
        .enumerate()
        .map(|(i, row)| insert_sorted(row, i))
        .collect();
    let incidence = binary_csr(n, n, rows);
    Hypergraph::new(incidence, vec![1.0; n])
}

pub(crate) fn validate_adjacency(a: &SparseMatrix) -> Result<()> {
    if a.rows() != a.cols() {
        return Err(Error::Invalid(format!(
            "adjacency must be square, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    for (i, j, v) in a.iter() {
        if v != 1.0 {
            return Err(Error::Invalid(format!(
                "adjacency entry ({i}, {j}) = {v}, expected binary"
            )));
        }
        if i == j {
            return Err(Error::Invalid(format!(
                "adjacency has a self-loop at vertex {i}"
            )));
        }
        if a.get(j, i) != 1.0 {
            return Err(Error::Invalid(format!(
                "adjacency is asymmetric: ({i}, {j}) stored but ({j}, {i}) missing"
            )));
        }
    }
    Ok(())
}

/// Symmetric normalized graph propagation operator
/// `P = D^{-1/2} (A + I) D^{-1/2}` where `D` is the degree matrix of
/// `A + I`. Requires a square symmetric binary adjacency with zero diagonal.
pub fn graph_operator(a: &SparseMatrix) -> Result<SparseMatrix> {
    validate_adjacency(a)?;
    let n = a.rows();
    // Degrees of A + I: row sum plus the inserted self-loop.
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / (a.row(i).0.len() as f64 + 1.0).sqrt())
        .collect();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let (cols, _) = a.row(i);
        let with_diag = insert_sorted(cols, i);
        let row: Vec<(usize, f64)> = with_diag
            .into_iter()
            .map(|j| (j, inv_sqrt[i] * inv_sqrt[j]))
            .collect();
        rows.push(row);
    }
    Ok(SparseMatrix::from_sorted_rows(n, n, rows))
}

/// Symmetric normalized hypergraph propagation operator
/// `Theta = D_v^{-1/2} H W D_e^{-1} H^T D_v^{-1/2}`, with vertex degrees
/// `d(v) = sum_e w(e) h(v,e)` and hyperedge degrees `d(e) = sum_v h(v,e)`.
pub fn hypergraph_operator(hg: &Hypergraph) -> Result<SparseMatrix> {
    let h = hg.incidence();
    let (n, m) = h.shape();
    let w = hg.edge_weights();

    let mut dv = vec![0.0; n];
    for (i, e, x) in h.iter() {
        dv[i] += w[e] * x;
    }
    if let Some(v) = dv.iter().position(|&d| d <= 0.0) {
        return Err(Error::Invalid(format!(
            "vertex {v} has zero degree (belongs to no hyperedge)"
        )));
    }
    let de = h.col_sums();
    debug_assert!(de.iter().all(|&d| d >= 1.0));

    let inv_sqrt_dv: Vec<f64> = dv.iter().map(|d| 1.0 / d.sqrt()).collect();
    // Per-hyperedge factor w(e) / d(e) of the inner product H W D_e^{-1} H^T.
    let edge_coef: Vec<f64> = (0..m).map(|e| w[e] / de[e]).collect();
    let ht = h.transpose();

    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], Vec::<usize>::new()),
            |(scratch, touched), i| {
                let (edges, _) = h.row(i);
                for &e in edges {
                    let coef = edge_coef[e];
                    let (members, _) = ht.row(e);
                    for &j in members {
                        if scratch[j] == 0.0 {
                            touched.push(j);
                        }
                        scratch[j] += coef;
                    }
                }
                touched.sort_unstable();
                let row: Vec<(usize, f64)> = touched
                    .iter()
                    .map(|&j| (j, inv_sqrt_dv[i] * inv_sqrt_dv[j] * scratch[j]))
                    .collect();
                for &j in touched.iter() {
                    scratch[j] = 0.0;
                }
                touched.clear();
                row
            },
        )
        .collect();
    Ok(SparseMatrix::from_sorted_rows(n, n, rows))
}

/// Writes an adjacency matrix as a tab-separated edge list, one `i<TAB>j`
/// pair per line with `i < j`, sorted lexicographically.
pub fn write_edge_list<W: Write>(a: &SparseMatrix, mut out: W) -> Result<()> {
    for (i, j, _) in a.iter() {
        if i < j {
            writeln!(out, "{i}\t{j}")?;
        }
    }
    Ok(())
}

/// Writes an incidence matrix as a tab-separated list of
/// `vertex<TAB>hyperedge` pairs, sorted lexicographically.
pub fn write_incidence_list<W: Write>(hg: &Hypergraph, mut out: W) -> Result<()> {
    for (v, e, _) in hg.incidence().iter() {
        writeln!(out, "{v}\t{e}")?;
    }
    Ok(())
}
