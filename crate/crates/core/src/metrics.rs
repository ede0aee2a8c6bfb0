//! Internal clustering-quality indices.
//!
//! All three metrics are computed on whatever representation was clustered
//! (embeddings, spectral rows, or raw features) with plain Euclidean
//! distance. Degenerate inputs are rejected up front so every reported
//! number is finite.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::support::Supports;
use crate::tensor::DenseMatrix;

/// The three indices for one clustering result.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    /// Mean silhouette coefficient, in `[-1, 1]`. Higher is better.
    pub silhouette: f64,
    /// Davies-Bouldin score, `>= 0`. Lower is better.
    pub davies_bouldin: f64,
    /// Calinski-Harabasz score, `>= 0`. Higher is better.
    pub calinski_harabasz: f64,
    /// Number of samples.
    pub n: usize,
    /// Number of clusters.
    pub k: usize,
}

impl MetricsReport {
    /// Computes all three indices for `labels` over the rows of `m`.
    pub fn compute(m: &DenseMatrix, labels: &[usize]) -> Result<Self> {
        Ok(MetricsReport {
            silhouette: silhouette(m, labels)?,
            davies_bouldin: davies_bouldin(m, labels)?,
            calinski_harabasz: calinski_harabasz(m, labels)?,
            n: m.rows(),
            k: cluster_count(m, labels)?,
        })
    }
}

/// Validates labels against `m` and returns the cluster count `k`.
/// Every id in `[0, k)` must be used at least once.
fn cluster_count(m: &DenseMatrix, labels: &[usize]) -> Result<usize> {
    if labels.len() != m.rows() {
        return Err(Error::Invalid(format!(
            "{} labels for {} rows",
            labels.len(),
            m.rows()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Invalid("no samples".into()));
    }
    let k = labels.iter().max().unwrap() + 1;
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Invalid(format!("cluster {c} is empty")));
    }
    Ok(k)
}

/// Mean silhouette coefficient `s_i = (b_i - a_i) / max(a_i, b_i)` where
/// `a_i` is the mean distance to the other members of the sample's own
/// cluster and `b_i` the smallest mean distance to any other cluster.
/// Samples in singleton clusters contribute 0.
pub fn silhouette(m: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    let k = cluster_count(m, labels)?;
    let n = m.rows();
    if k < 2 || k > n - 1 {
        return Err(Error::Invalid(format!(
            "silhouette undefined for k = {k} with n = {n}"
        )));
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    let supports = Supports::build(m);

    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; supports.cols], vec![0.0; k]),
            |(scratch, sums), i| {
                if counts[labels[i]] == 1 {
                    return 0.0;
                }
                sums.iter_mut().for_each(|s| *s = 0.0);
                supports.scatter(i, scratch);
                for j in 0..n {
                    if j != i {
                        sums[labels[j]] += supports.sq_dist_via_scratch(scratch, i, j).sqrt();
                    }
                }
                supports.clear(i, scratch);
                let own = labels[i];
                let a = sums[own] / (counts[own] - 1) as f64;
                let b = (0..k)
                    .filter(|&c| c != own)
                    .map(|c| sums[c] / counts[c] as f64)
                    .fold(f64::INFINITY, f64::min);
                let denom = a.max(b);
                if denom == 0.0 {
                    0.0
                } else {
                    (b - a) / denom
                }
            },
        )
        .collect();
    Ok(scores.iter().sum::<f64>() / n as f64)
}

fn centroids_and_counts(m: &DenseMatrix, labels: &[usize], k: usize) -> (Vec<f64>, Vec<usize>) {
    let d = m.cols();
    let mut centroids = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, &c) in labels.iter().enumerate() {
        counts[c] += 1;
        let dst = &mut centroids[c * d..(c + 1) * d];
        for (slot, &v) in dst.iter_mut().zip(m.row(i)) {
            *slot += v;
        }
    }
    for c in 0..k {
        let inv = 1.0 / counts[c] as f64;
        for v in &mut centroids[c * d..(c + 1) * d] {
            *v *= inv;
        }
    }
    (centroids, counts)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Davies-Bouldin score: the mean over clusters of the worst ratio
/// `(s_i + s_j) / d(c_i, c_j)`, with `s_i` the mean member-to-centroid
/// distance of cluster `i`. Zero is the best possible score.
pub fn davies_bouldin(m: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    let k = cluster_count(m, labels)?;
    if k < 2 {
        return Err(Error::Invalid(
            "Davies-Bouldin needs at least 2 clusters".into(),
        ));
    }
    let d = m.cols();
    let (centroids, counts) = centroids_and_counts(m, labels, k);

    let mut spread = vec![0.0; k];
    for (i, &c) in labels.iter().enumerate() {
        spread[c] += sq_dist(m.row(i), &centroids[c * d..(c + 1) * d]).sqrt();
    }
    for c in 0..k {
        spread[c] /= counts[c] as f64;
    }

    let mut total = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let gap = sq_dist(
                &centroids[i * d..(i + 1) * d],
                &centroids[j * d..(j + 1) * d],
            )
            .sqrt();
            if gap == 0.0 {
                return Err(Error::Invalid(format!(
                    "clusters {i} and {j} have coincident centroids"
                )));
            }
            worst = worst.max((spread[i] + spread[j]) / gap);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Calinski-Harabasz score: `(tr(B)/(k-1)) / (tr(W)/(n-k))` with `tr(B)`
/// the between-cluster and `tr(W)` the within-cluster scatter.
pub fn calinski_harabasz(m: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    let k = cluster_count(m, labels)?;
    let n = m.rows();
    if k < 2 || k > n - 1 {
        return Err(Error::Invalid(format!(
            "Calinski-Harabasz undefined for k = {k} with n = {n}"
        )));
    }
    let d = m.cols();
    let (centroids, counts) = centroids_and_counts(m, labels, k);

    let mut global = vec![0.0; d];
    for i in 0..n {
        for (g, &v) in global.iter_mut().zip(m.row(i)) {
            *g += v;
        }
    }
    for g in &mut global {
        *g /= n as f64;
    }

    let mut tr_w = 0.0;
    for (i, &c) in labels.iter().enumerate() {
        tr_w += sq_dist(m.row(i), &centroids[c * d..(c + 1) * d]);
    }
    if tr_w == 0.0 {
        return Err(Error::Invalid(
            "within-cluster dispersion is zero (all points coincide with centroids)".into(),
        ));
    }
    let mut tr_b = 0.0;
    for c in 0..k {
        tr_b += counts[c] as f64 * sq_dist(&centroids[c * d..(c + 1) * d], &global);
    }
    Ok((tr_b / (k - 1) as f64) / (tr_w / (n - k) as f64))
}
