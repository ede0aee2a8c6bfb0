//! Lloyd's k-means with k-means++ seeding and restarts.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::support::Supports;
use crate::tensor::DenseMatrix;

/// Result of a k-means run.
#[derive(Debug, Clone)]
pub struct ClusterAssignment {
    /// Cluster id per input row, canonicalized so that cluster 0 is the
    /// cluster of the lowest-index point, cluster 1 the next new cluster
    /// encountered, and so on.
    pub labels: Vec<usize>,
    /// `k x d` centroid matrix, rows ordered consistently with `labels`.
    pub centroids: DenseMatrix,
    /// Sum of squared Euclidean distances to assigned centroids.
    pub inertia: f64,
    /// Lloyd iterations executed by the winning restart.
    pub iterations_run: usize,
}

impl ClusterAssignment {
    /// Number of clusters.
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    /// Cluster sizes indexed by cluster id.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

struct RestartOutcome {
    labels: Vec<usize>,
    centroids: Vec<f64>,
    inertia: f64,
    iterations: usize,
    trace: Vec<f64>,
}

/// Seeded k-means: best of `n_init` k-means++ restarts by inertia, ties
/// resolved toward the lower restart index. Deterministic for a fixed seed.
pub fn kmeans(
    m: &DenseMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
    n_init: usize,
) -> Result<ClusterAssignment> {
    kmeans_with_trace(m, k, seed, max_iter, n_init).map(|(a, _)| a)
}

/// Same as [`kmeans`] but also returns the per-iteration inertia trace of
/// the winning restart. The trace is non-increasing; exposing it lets
/// callers and tests verify that directly.
pub fn kmeans_with_trace(
    m: &DenseMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
    n_init: usize,
) -> Result<(ClusterAssignment, Vec<f64>)> {
    let n = m.rows();
    if k == 0 || k > n {
        return Err(Error::Invalid(format!(
            "k = {k} out of range for {n} points"
        )));
    }
    if n_init == 0 || max_iter == 0 {
        return Err(Error::Invalid("n_init and max_iter must be >= 1".into()));
    }
    let supports = Supports::build(m);

    let runs: Vec<Result<RestartOutcome>> = (0..n_init)
        .into_par_iter()
        .map(|r| run_restart(&supports, k, Rng::stream(seed, r as u64), max_iter))
        .collect();

    let mut best: Option<RestartOutcome> = None;
    for run in runs {
        let run = run?;
        let better = match &best {
            None => true,
            Some(b) => run.inertia < b.inertia,
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.expect("n_init >= 1");

    let (labels, centroids) = canonicalize(best.labels, best.centroids, k, m.cols());
    Ok((
        ClusterAssignment {
            labels,
            centroids: DenseMatrix::from_raw(k, m.cols(), centroids),
            inertia: best.inertia,
            iterations_run: best.iterations,
        },
        best.trace,
    ))
}

/// k-means++ seeding: first center uniform, subsequent centers sampled with
/// probability proportional to squared distance from the nearest chosen
/// center. Errors when fewer than `k` distinct points exist.
fn seed_centers(supports: &Supports, k: usize, rng: &mut Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = supports.n();
    let d = supports.cols;
    let mut centers = vec![0.0; k * d];
    let mut scratch = vec![0.0; d];

    let first = rng.index(n);
    supports.scatter(first, &mut scratch);
    centers[..d].copy_from_slice(&scratch);
    let mut dist2: Vec<f64> = (0..n)
        .map(|j| supports.sq_dist_via_scratch(&scratch, first, j))
        .collect();
    supports.clear(first, &mut scratch);

    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        if total <= 0.0 {
            return Err(Error::Invalid(format!(
                "cannot seed {k} clusters: only {c} distinct points available"
            )));
        }
        let target = rng.next_f64() * total;
        let mut cum = 0.0;
        let mut chosen = n - 1;
        for (j, &w) in dist2.iter().enumerate() {
            cum += w;
            if cum > target {
                chosen = j;
                break;
            }
        }
        supports.scatter(chosen, &mut scratch);
        centers[c * d..(c + 1) * d].copy_from_slice(&scratch);
        for (j, slot) in dist2.iter_mut().enumerate() {
            let nd = supports.sq_dist_via_scratch(&scratch, chosen, j);
            if nd < *slot {
                *slot = nd;
            }
        }
        supports.clear(chosen, &mut scratch);
    }
    let sq_norms = (0..k)
        .map(|c| centers[c * d..(c + 1) * d].iter().map(|v| v * v).sum())
        .collect();
    Ok((centers, sq_norms))
}

fn run_restart(
    supports: &Supports,
    k: usize,
    mut rng: Rng,
    max_iter: usize,
) -> Result<RestartOutcome> {
    let n = supports.n();
    let d = supports.cols;
    let (mut centers, mut center_sq) = seed_centers(supports, k, &mut rng)?;

    let mut labels = vec![usize::MAX; n];
    let mut assigned_d2 = vec![0.0; n];
    let mut trace = Vec::new();
    let mut iterations = 0;

    loop {
        iterations += 1;
        // Assignment: nearest centroid, ties to the lower cluster id.
        let prev = labels.clone();
        let assigned: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut best = (0usize, f64::INFINITY);
                for c in 0..k {
                    let row = &centers[c * d..(c + 1) * d];
                    let dist = supports.sq_dist_to_dense(i, row, center_sq[c]);
                    if dist < best.1 {
                        best = (c, dist);
                    }
                }
                best
            })
            .collect();
        for (i, (c, dist)) in assigned.into_iter().enumerate() {
            labels[i] = c;
            assigned_d2[i] = dist;
        }

        repair_empty_clusters(k, &mut labels, &mut assigned_d2);
        trace.push(assigned_d2.iter().sum());

        if labels == prev || iterations >= max_iter {
            break;
        }

        // Update: centroids become member means.
        centers.iter_mut().for_each(|v| *v = 0.0);
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            counts[c] += 1;
            let dst = &mut centers[c * d..(c + 1) * d];
            for &(col, v) in &supports.entries[i] {
                dst[col] += v;
            }
        }
        for c in 0..k {
            debug_assert!(counts[c] > 0);
            let inv = 1.0 / counts[c] as f64;
            for v in &mut centers[c * d..(c + 1) * d] {
                *v *= inv;
            }
            center_sq[c] = centers[c * d..(c + 1) * d].iter().map(|v| v * v).sum();
        }
    }

    // Recompute centroids and inertia for the final assignment so the
    // returned triple is self-consistent.
    let mut counts = vec![0usize; k];
    centers.iter_mut().for_each(|v| *v = 0.0);
    for (i, &c) in labels.iter().enumerate() {
        counts[c] += 1;
        let dst = &mut centers[c * d..(c + 1) * d];
        for &(col, v) in &supports.entries[i] {
            dst[col] += v;
        }
    }
    for c in 0..k {
        let inv = 1.0 / counts[c] as f64;
        for v in &mut centers[c * d..(c + 1) * d] {
            *v *= inv;
        }
        center_sq[c] = centers[c * d..(c + 1) * d].iter().map(|v| v * v).sum();
    }
    let inertia = (0..n)
        .map(|i| {
            let c = labels[i];
            supports.sq_dist_to_dense(i, &centers[c * d..(c + 1) * d], center_sq[c])
        })
        .sum();

    Ok(RestartOutcome {
        labels,
        centroids: centers,
        inertia,
        iterations,
        trace,
    })
}

/// Moves the point farthest from its assigned centroid into each empty
/// cluster (lowest empty cluster id first). The moved point's distance is
/// zeroed: the update step will place the centroid on the point itself.
fn repair_empty_clusters(k: usize, labels: &mut [usize], assigned_d2: &mut [f64]) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far: Option<(usize, f64)> = None;
        for (i, &d2) in assigned_d2.iter().enumerate() {
            // Never empty the donor cluster.
            if counts[labels[i]] <= 1 {
                continue;
            }
            let better = match far {
                None => true,
                Some((_, fd)) => d2 > fd,
            };
            if better {
                far = Some((i, d2));
            }
        }
        let (p, _) = far.expect("k <= n guarantees a donor point");
        counts[labels[p]] -= 1;
        labels[p] = c;
        counts[c] = 1;
        assigned_d2[p] = 0.0;
    }
}

/// Relabels clusters in order of first appearance and reorders centroid
/// rows accordingly.
fn canonicalize(
    labels: Vec<usize>,
    centroids: Vec<f64>,
    k: usize,
    d: usize,
) -> (Vec<usize>, Vec<f64>) {
    let mut remap = vec![usize::MAX; k];
    let mut next = 0;
    for &l in &labels {
        if remap[l] == usize::MAX {
            remap[l] = next;
            next += 1;
        }
    }
    debug_assert_eq!(next, k, "every cluster non-empty");
    let new_labels: Vec<usize> = labels.iter().map(|&l| remap[l]).collect();
    let mut new_centroids = vec![0.0; k * d];
    for old in 0..k {
        let new = remap[old];
        new_centroids[new * d..(new + 1) * d].copy_from_slice(&centroids[old * d..(old + 1) * d]);
    }
    (new_labels, new_centroids)
}
