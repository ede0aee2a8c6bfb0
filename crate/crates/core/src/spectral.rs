//! Symmetric eigensolver and normalized spectral clustering.
//!
//! Small problems (n <= 512) go through a dense cyclic Jacobi
//! diagonalization. Larger ones use block Lanczos with full
//! reorthogonalization and an explicit Rayleigh-Ritz extraction, restarted
//! from a fixed internal seed so results are reproducible. Every returned
//! pair is residual-checked against the tolerance below.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::validate_adjacency;
use crate::kmeans::{kmeans, ClusterAssignment};
use crate::rng::Rng;
use crate::tensor::{DenseMatrix, SparseMatrix};

/// Per-pair residual tolerance: `||S v - lambda v|| <= TOL * max(1, |lambda|)`.
const RESIDUAL_TOL: f64 = 1e-8;
/// Largest order handled by the dense Jacobi path.
const DENSE_CUTOFF: usize = 512;
/// Fixed seed for the Lanczos start block.
const LANCZOS_SEED: u64 = 0x5eed_1a2c;

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// `n x k`; column `l` pairs with `values[l]`.
    pub vectors: DenseMatrix,
}

/// The `k` algebraically smallest eigenpairs of a symmetric sparse matrix.
pub fn sym_eigen_smallest(s: &SparseMatrix, k: usize) -> Result<EigenPairs> {
    let n = s.rows();
    if s.cols() != n {
        return Err(Error::Invalid(format!(
            "eigensolver needs a square matrix, got {}x{}",
            n,
            s.cols()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::Invalid(format!(
            "requested {k} eigenpairs from an order-{n} matrix"
        )));
    }
    if !s.is_symmetric(1e-12) {
        return Err(Error::Invalid(
            "eigensolver input is not symmetric within 1e-12".into(),
        ));
    }
    if n <= DENSE_CUTOFF {
        dense_smallest(s, k)
    } else {
        lanczos_smallest(s, k)
    }
}

fn dense_smallest(s: &SparseMatrix, k: usize) -> Result<EigenPairs> {
    let n = s.rows();
    // Symmetrize exactly so Jacobi sees a bitwise-symmetric matrix.
    let mut a = vec![0.0; n * n];
    for (i, j, v) in s.iter() {
        a[i * n + j] += 0.5 * v;
        a[j * n + i] += 0.5 * v;
    }
    let (values, vectors) = jacobi_eigen(a, n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| values[x].partial_cmp(&values[y]).unwrap());
    let mut out_vals = Vec::with_capacity(k);
    let mut out_vecs = vec![0.0; n * k];
    for (slot, &idx) in order.iter().take(k).enumerate() {
        out_vals.push(values[idx]);
        for r in 0..n {
            out_vecs[r * k + slot] = vectors[r * n + idx];
        }
    }
    Ok(EigenPairs {
        values: out_vals,
        vectors: DenseMatrix::from_raw(n, k, out_vecs),
    })
}

/// Cyclic Jacobi diagonalization of a dense symmetric matrix (row-major).
/// Returns eigenvalues (unsorted) and the accumulated rotation matrix whose
/// columns are the eigenvectors.
fn jacobi_eigen(mut a: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n <= 1 {
        return Ok((a, v));
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-14 * frob.max(f64::MIN_POSITIVE);

    for _sweep in 0..60 {
        let off: f64 = {
            let mut acc = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    acc += a[p * n + q] * a[p * n + q];
                }
            }
            (2.0 * acc).sqrt()
        };
        if off <= tol {
            return Ok((diagonal(&a, n), v));
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = arp - s * (arq + tau * arp);
                    let new_rq = arq + s * (arp - tau * arq);
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = vrp - s * (vrq + tau * vrp);
                    v[r * n + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }
    // Quadratic convergence makes 60 sweeps enormous headroom; reaching
    // here means the input was pathological.
    let off: f64 = {
        let mut acc = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                acc += a[p * n + q] * a[p * n + q];
            }
        }
        (2.0 * acc).sqrt()
    };
    Err(Error::EigenNoConvergence {
        residual: off,
        subspace: n,
        tolerance: tol,
    })
}

fn diagonal(a: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| a[i * n + i]).collect()
}

fn spmv(s: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    (0..s.rows())
        .into_par_iter()
        .map(|i| {
            let (cols, vals) = s.row(i);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            acc
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Removes the components of `w` along every vector in `basis` (classical
/// Gram-Schmidt, applied twice by the callers for stability).
fn project_out(w: &mut [f64], basis: &[Vec<f64>]) {
    for v in basis {
        let coef = dot(v, w);
        if coef != 0.0 {
            for (slot, &x) in w.iter_mut().zip(v) {
                *slot -= coef * x;
            }
        }
    }
}

/// Block Lanczos with full reorthogonalization; eigenpair extraction is an
/// explicit Rayleigh-Ritz on the accumulated orthonormal basis, which keeps
/// degenerate eigenvalues (multiplicity up to the block size per step)
/// well-behaved.
fn lanczos_smallest(s: &SparseMatrix, k: usize) -> Result<EigenPairs> {
    let n = s.rows();
    let block = k.min(32).max(1);
    let cap = n.min((10 * k).max(300));
    let mut rng = Rng::seed_from_u64(LANCZOS_SEED);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut block_vecs = fresh_block(&mut rng, n, block, &basis);
    let mut best_residual = f64::INFINITY;

    loop {
        basis.extend(block_vecs.iter().cloned());
        let checkpoint = basis.len() + block > cap || basis.len() >= 2 * k + 2 * block;
        if checkpoint {
            let (vals, vecs, worst) = rayleigh_ritz(s, &basis, k);
            best_residual = best_residual.min(worst);
            if worst <= RESIDUAL_TOL * vals.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
                return Ok(EigenPairs {
                    values: vals,
                    vectors: vecs,
                });
            }
            if basis.len() + block > cap {
                return Err(Error::EigenNoConvergence {
                    residual: best_residual,
                    subspace: basis.len(),
                    tolerance: RESIDUAL_TOL,
                });
            }
        }
        // Next block: S times the current one, reorthogonalized.
        let mut next: Vec<Vec<f64>> = block_vecs.iter().map(|q| spmv(s, q)).collect();
        let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(block);
        for mut w in next.drain(..) {
            project_out(&mut w, &basis);
            project_out(&mut w, &accepted);
            project_out(&mut w, &basis);
            project_out(&mut w, &accepted);
            let len = norm(&w);
            if len > 1e-10 {
                for x in &mut w {
                    *x /= len;
                }
                accepted.push(w);
            } else {
                // Krylov space saturated in this direction; inject a fresh
                // random one.
                accepted.push(random_orthonormal(&mut rng, n, &basis, &accepted));
            }
        }
        block_vecs = accepted;
    }
}

fn fresh_block(rng: &mut Rng, n: usize, block: usize, basis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(block);
    for _ in 0..block {
        out.push(random_orthonormal(rng, n, basis, &out));
    }
    out
}

fn random_orthonormal(
    rng: &mut Rng,
    n: usize,
    basis: &[Vec<f64>],
    extra: &[Vec<f64>],
) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        project_out(&mut w, basis);
        project_out(&mut w, extra);
        project_out(&mut w, basis);
        project_out(&mut w, extra);
        let len = norm(&w);
        if len > 1e-8 {
            for x in &mut w {
                *x /= len;
            }
            return w;
        }
    }
}

/// Rayleigh-Ritz extraction of the `k` smallest pairs from the span of
/// `basis`. Returns values, vectors, and the worst residual norm.
fn rayleigh_ritz(s: &SparseMatrix, basis: &[Vec<f64>], k: usize) -> (Vec<f64>, DenseMatrix, f64) {
    let n = s.rows();
    let m = basis.len();
    let sv: Vec<Vec<f64>> = basis.iter().map(|v| spmv(s, v)).collect();
    let mut t = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let val = 0.5 * (dot(&basis[i], &sv[j]) + dot(&basis[j], &sv[i]));
            t[i * m + j] = val;
            t[j * m + i] = val;
        }
    }
    let (tvals, tvecs) = jacobi_eigen(t, m).expect("projected matrix diagonalizes");
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| tvals[x].partial_cmp(&tvals[y]).unwrap());

    let mut values = Vec::with_capacity(k);
    let mut vectors = vec![0.0; n * k];
    let mut worst = 0.0f64;
    for (slot, &idx) in order.iter().take(k).enumerate() {
        let lambda = tvals[idx];
        values.push(lambda);
        let y: Vec<f64> = (0..m).map(|i| tvecs[i * m + idx]).collect();
        // x = V y and S x = (S V) y come from the same coefficients.
        let mut x = vec![0.0; n];
        let mut sx = vec![0.0; n];
        for (i, &coef) in y.iter().enumerate() {
            if coef != 0.0 {
                for r in 0..n {
                    x[r] += coef * basis[i][r];
                    sx[r] += coef * sv[i][r];
                }
            }
        }
        let mut resid_sq = 0.0;
        for r in 0..n {
            let diff = sx[r] - lambda * x[r];
            resid_sq += diff * diff;
        }
        worst = worst.max(resid_sq.sqrt());
        for r in 0..n {
            vectors[r * k + slot] = x[r];
        }
    }
    (values, DenseMatrix::from_raw(n, k, vectors), worst)
}

/// Symmetric normalized Laplacian `I - D^{-1/2} A D^{-1/2}`. Isolated
/// vertices get unit degree, which leaves their row equal to the identity
/// row.
pub fn normalized_laplacian(a: &SparseMatrix) -> Result<SparseMatrix> {
    validate_adjacency(a)?;
    let n = a.rows();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d = a.row(i).0.len() as f64;
            if d == 0.0 {
                1.0
            } else {
                1.0 / d.sqrt()
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let (cols, _) = a.row(i);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(cols.len() + 1);
        let mut inserted_diag = false;
        for &j in cols {
            if !inserted_diag && j > i {
                row.push((i, 1.0));
                inserted_diag = true;
            }
            row.push((j, -inv_sqrt[i] * inv_sqrt[j]));
        }
        if !inserted_diag {
            row.push((i, 1.0));
        }
        rows.push(row);
    }
    Ok(SparseMatrix::from_sorted_rows(n, n, rows))
}

/// Spectral embedding: rows of the `n x k` matrix of the `k` smallest
/// eigenvectors of the normalized Laplacian, each row scaled to unit length
/// (zero rows are left as zero).
pub fn spectral_embedding(a: &SparseMatrix, k: usize) -> Result<DenseMatrix> {
    let lap = normalized_laplacian(a)?;
    let pairs = sym_eigen_smallest(&lap, k)?;
    let n = a.rows();
    let mut values = pairs.vectors.values().to_vec();
    for i in 0..n {
        let row = &mut values[i * k..(i + 1) * k];
        let len = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len > 0.0 {
            for v in row {
                *v /= len;
            }
        }
    }
    Ok(DenseMatrix::from_raw(n, k, values))
}

/// Normalized spectral clustering: k-means (10 restarts) over the
/// row-normalized eigenvector embedding.
pub fn spectral_clustering(a: &SparseMatrix, k: usize, seed: u64) -> Result<ClusterAssignment> {
    if k < 2 {
        return Err(Error::Invalid(format!(
            "spectral clustering needs k >= 2, got {k}"
        )));
    }
    let embedding = spectral_embedding(a, k)?;
    kmeans(&embedding, k, seed, 300, 10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn residual(s: &SparseMatrix, lambda: f64, v: &[f64]) -> f64 {
        let sv = spmv(s, v);
        sv.iter()
            .zip(v)
            .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
            .sum::<f64>()
            .sqrt()
    }

    fn check_pairs(s: &SparseMatrix, pairs: &EigenPairs) {
        let k = pairs.values.len();
        let n = s.rows();
        for w in pairs.values.windows(2) {
            assert!(w[0] <= w[1] + 1e-12, "values not ascending");
        }
        for l in 0..k {
            let v: Vec<f64> = (0..n).map(|r| pairs.vectors.get(r, l)).collect();
            let r = residual(s, pairs.values[l], &v);
            assert!(
                r <= RESIDUAL_TOL * pairs.values[l].abs().max(1.0),
                "pair {l}: residual {r}"
            );
        }
        for a in 0..k {
            for b in 0..k {
                let mut acc = 0.0;
                for r in 0..n {
                    acc += pairs.vectors.get(r, a) * pairs.vectors.get(r, b);
                }
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((acc - want).abs() < 1e-8, "gram[{a}][{b}] = {acc}");
            }
        }
    }

    /// Independent oracle: nalgebra's symmetric eigensolver.
    fn oracle_eigenvalues(s: &SparseMatrix) -> Vec<f64> {
        let n = s.rows();
        let m = DMatrix::from_fn(n, n, |i, j| s.get(i, j));
        let mut vals: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals
    }

    fn random_symmetric(rng: &mut crate::rng::Rng, n: usize, density: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, rng.uniform(-2.0, 2.0)));
            for j in (i + 1)..n {
                if rng.bernoulli(density) {
                    let v = rng.uniform(-1.0, 1.0);
                    t.push((i, j, v));
                    t.push((j, i, v));
                }
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn identity_eigenvalues() {
        let s = SparseMatrix::identity(5);
        let pairs = sym_eigen_smallest(&s, 2).unwrap();
        assert!((pairs.values[0] - 1.0).abs() < 1e-12);
        assert!((pairs.values[1] - 1.0).abs() < 1e-12);
        check_pairs(&s, &pairs);
    }

    #[test]
    fn diagonal_matrix_pairs() {
        let s =
            SparseMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]).unwrap();
        let pairs = sym_eigen_smallest(&s, 2).unwrap();
        assert!((pairs.values[0] - 1.0).abs() < 1e-12);
        assert!((pairs.values[1] - 2.0).abs() < 1e-12);
        // Eigenvectors are +-e1 and +-e2.
        assert!((pairs.vectors.get(0, 0).abs() - 1.0).abs() < 1e-10);
        assert!((pairs.vectors.get(1, 1).abs() - 1.0).abs() < 1e-10);
        check_pairs(&s, &pairs);
    }

    #[test]
    fn random_dense_path_matches_oracle() {
        let mut rng = crate::rng::Rng::seed_from_u64(100);
        for trial in 0..5 {
            let s = random_symmetric(&mut rng, 30, 0.3);
            let pairs = sym_eigen_smallest(&s, 30).unwrap();
            let want = oracle_eigenvalues(&s);
            for (got, want) in pairs.values.iter().zip(&want) {
                assert!((got - want).abs() < 1e-8, "trial {trial}: {got} vs {want}");
            }
            check_pairs(&s, &pairs);
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let s = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0)]).unwrap();
        assert!(sym_eigen_smallest(&s, 1).is_err());
    }

    #[test]
    fn lanczos_path_matches_oracle() {
        // n > 512 forces the iterative path. Shifted diagonal plus sparse
        // symmetric noise keeps the low end of the spectrum separated.
        let n = 600;
        let mut rng = crate::rng::Rng::seed_from_u64(5);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 0.05 * i as f64));
        }
        for _ in 0..800 {
            let i = rng.index(n);
            let j = rng.index(n);
            if i < j {
                let v = rng.uniform(-0.01, 0.01);
                t.push((i, j, v));
                t.push((j, i, v));
            }
        }
        // Deduplicate collisions by keeping the first.
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        t.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        let t: Vec<(usize, usize, f64)> = {
            // Re-symmetrize after dedup.
            let mut up: Vec<(usize, usize, f64)> =
                t.iter().filter(|&&(i, j, _)| i <= j).copied().collect();
            let lows: Vec<(usize, usize, f64)> = up
                .iter()
                .filter(|&&(i, j, _)| i < j)
                .map(|&(i, j, v)| (j, i, v))
                .collect();
            up.extend(lows);
            up
        };
        let s = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let pairs = sym_eigen_smallest(&s, 4).unwrap();
        let want = oracle_eigenvalues(&s);
        for l in 0..4 {
            assert!(
                (pairs.values[l] - want[l]).abs() < 1e-7,
                "pair {l}: {} vs {}",
                pairs.values[l],
                want[l]
            );
        }
        check_pairs(&s, &pairs);
    }

    #[test]
    fn lanczos_handles_degenerate_kernel() {
        // 60 disjoint 10-cliques: the normalized Laplacian kernel has
        // dimension 60, far above the requested k.
        let n = 600;
        let mut t = Vec::new();
        for c in 0..60 {
            for a in 0..10 {
                for b in 0..10 {
                    if a != b {
                        t.push((c * 10 + a, c * 10 + b, 1.0));
                    }
                }
            }
        }
        let adj = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let lap = normalized_laplacian(&adj).unwrap();
        let pairs = sym_eigen_smallest(&lap, 5).unwrap();
        for &v in &pairs.values {
            assert!(v.abs() < 1e-8, "kernel eigenvalue came out as {v}");
        }
        check_pairs(&lap, &pairs);
    }

    fn clique_union(sizes: &[usize]) -> SparseMatrix {
        let n: usize = sizes.iter().sum();
        let mut t = Vec::new();
        let mut base = 0;
        for &s in sizes {
            for a in 0..s {
                for b in 0..s {
                    if a != b {
                        t.push((base + a, base + b, 1.0));
                    }
                }
            }
            base += s;
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn laplacian_spectrum_in_zero_two() {
        let mut rng = crate::rng::Rng::seed_from_u64(8);
        for _ in 0..5 {
            let n = 12 + rng.index(18);
            let mut t = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.bernoulli(0.25) {
                        t.push((i, j, 1.0));
                        t.push((j, i, 1.0));
                    }
                }
            }
            let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
            let lap = normalized_laplacian(&a).unwrap();
            let vals = oracle_eigenvalues(&lap);
            assert!(vals[0] >= -1e-10);
            assert!(*vals.last().unwrap() <= 2.0 + 1e-10);
        }
    }

    #[test]
    fn kernel_multiplicity_counts_components() {
        let a = clique_union(&[3, 4, 5]);
        let lap = normalized_laplacian(&a).unwrap();
        let vals = oracle_eigenvalues(&lap);
        let zeros = vals.iter().filter(|v| v.abs() < 1e-10).count();
        assert_eq!(zeros, 3);
        let mine = sym_eigen_smallest(&lap, 3).unwrap();
        assert!(mine.values.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn clustering_recovers_disjoint_triangles() {
        let a = clique_union(&[3, 3]);
        let out = spectral_clustering(&a, 2, 1).unwrap();
        assert_eq!(out.labels, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn clustering_two_vertices() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let out = spectral_clustering(&a, 2, 3).unwrap();
        let mut sizes = out.cluster_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1]);
    }

    #[test]
    fn planted_partition_recovered() {
        let mut hits = 0;
        for seed in 0..10u64 {
            let mut rng = crate::rng::Rng::seed_from_u64(1000 + seed);
            let n = 40;
            let mut t = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    let same = (i < 20) == (j < 20);
                    let p = if same { 0.8 } else { 0.05 };
                    if rng.bernoulli(p) {
                        t.push((i, j, 1.0));
                        t.push((j, i, 1.0));
                    }
                }
            }
            let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
            let out = spectral_clustering(&a, 2, seed).unwrap();
            let planted: Vec<usize> = (0..n).map(|i| usize::from(i >= 20)).collect();
            let agree = out
                .labels
                .iter()
                .zip(&planted)
                .filter(|(a, b)| a == b)
                .count();
            let score = agree.max(n - agree);
            if score == n {
                hits += 1;
            }
        }
        assert!(hits >= 9, "recovered {hits}/10 planted partitions");
    }

    #[test]
    fn clustering_invariant_under_permutation() {
        let a = clique_union(&[4, 3]);
        let n = 7;
        let perm: Vec<usize> = vec![6, 2, 4, 0, 5, 1, 3];
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut t = Vec::new();
        for (i, j, v) in a.iter() {
            t.push((inv[i], inv[j], v));
        }
        let ap = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let base = spectral_clustering(&a, 2, 9).unwrap();
        let permuted = spectral_clustering(&ap, 2, 9).unwrap();
        // Same partition after mapping back, up to relabeling.
        let mut map = [usize::MAX; 2];
        for old in 0..n {
            let l = permuted.labels[inv[old]];
            let b = base.labels[old];
            if map[b] == usize::MAX {
                map[b] = l;
            }
            assert_eq!(map[b], l, "vertex {old}");
        }
    }
}
