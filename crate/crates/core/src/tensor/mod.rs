//! Dense and sparse matrix kernels.
//!
//! These are the only numerical primitives in the crate: CSR-times-dense,
//! dense-times-dense (optionally against a transposed right operand), and
//! elementwise activations. Accumulation order is fixed (ascending column
//! index within a row, ascending inner index in dense products), so results
//! are bit-identical regardless of how many threads execute the row loop.

mod dense;
mod sparse;

pub use dense::DenseMatrix;
pub use sparse::SparseMatrix;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Elementwise activation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// `max(0, x)`
    Relu,
    /// `1 / (1 + e^-x)`
    Sigmoid,
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `ln(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Sparse-times-dense product `S * M`.
pub fn spmm(s: &SparseMatrix, m: &DenseMatrix) -> Result<DenseMatrix> {
    if s.cols() != m.rows() {
        return Err(Error::dim("spmm", s.rows(), s.cols(), m.rows(), m.cols()));
    }
    let cols = m.cols();
    let mut out = vec![0.0; s.rows() * cols];
    out.par_chunks_mut(cols.max(1))
        .enumerate()
        .for_each(|(i, dst)| {
            let (idx, vals) = s.row(i);
            for (&k, &v) in idx.iter().zip(vals) {
                let src = m.row(k);
                for (d, &x) in dst.iter_mut().zip(src) {
                    *d += v * x;
                }
            }
        });
    Ok(DenseMatrix::from_raw(s.rows(), cols, out))
}

/// Dense product `A * B`, or `A * B^T` when `transpose_b` is set.
pub fn gemm(a: &DenseMatrix, b: &DenseMatrix, transpose_b: bool) -> Result<DenseMatrix> {
    let (inner_b, out_cols) = if transpose_b {
        (b.cols(), b.rows())
    } else {
        (b.rows(), b.cols())
    };
    if a.cols() != inner_b {
        return Err(Error::dim("gemm", a.rows(), a.cols(), b.rows(), b.cols()));
    }
    let mut out = vec![0.0; a.rows() * out_cols];
    if transpose_b {
        // C[i][j] = <a_i, b_j>, both contiguous rows.
        out.par_chunks_mut(out_cols.max(1))
            .enumerate()
            .for_each(|(i, dst)| {
                let ai = a.row(i);
                for (j, d) in dst.iter_mut().enumerate() {
                    let bj = b.row(j);
                    let mut acc = 0.0;
                    for (x, y) in ai.iter().zip(bj) {
                        acc += x * y;
                    }
                    *d = acc;
                }
            });
    } else {
        // i-k-j order streams rows of B.
        out.par_chunks_mut(out_cols.max(1))
            .enumerate()
            .for_each(|(i, dst)| {
                let ai = a.row(i);
                for (k, &aik) in ai.iter().enumerate() {
                    if aik == 0.0 {
                        continue;
                    }
                    let bk = b.row(k);
                    for (d, &x) in dst.iter_mut().zip(bk) {
                        *d += aik * x;
                    }
                }
            });
    }
    Ok(DenseMatrix::from_raw(a.rows(), out_cols, out))
}

/// `A^T * B` for dense operands. Parallel over output rows; each output row
/// reads one strided column of `A`.
pub(crate) fn gemm_tn(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows() != b.rows() {
        return Err(Error::dim("gemm_tn", a.rows(), a.cols(), b.rows(), b.cols()));
    }
    let (n, p) = a.shape();
    let q = b.cols();
    let mut out = vec![0.0; p * q];
    out.par_chunks_mut(q.max(1)).enumerate().for_each(|(r, dst)| {
        for i in 0..n {
            let air = a.get(i, r);
            if air == 0.0 {
                continue;
            }
            let bi = b.row(i);
            for (d, &x) in dst.iter_mut().zip(bi) {
                *d += air * x;
            }
        }
    });
    Ok(DenseMatrix::from_raw(p, q, out))
}

/// Applies `f` to every entry, preserving shape.
pub fn map_elementwise(m: &DenseMatrix, f: Activation) -> DenseMatrix {
    let values = match f {
        Activation::Relu => m.values().iter().map(|&x| x.max(0.0)).collect(),
        Activation::Sigmoid => m.values().iter().map(|&x| sigmoid(x)).collect(),
    };
    DenseMatrix::from_raw(m.rows(), m.cols(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_dense(rng: &mut Rng, rows: usize, cols: usize) -> DenseMatrix {
        let values = (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0)).collect();
        DenseMatrix::from_raw(rows, cols, values)
    }

    fn random_sparse(rng: &mut Rng, rows: usize, cols: usize, density: f64) -> SparseMatrix {
        let mut data = Vec::with_capacity(rows);
        for _ in 0..rows {
            let mut row = Vec::new();
            for c in 0..cols {
                if rng.bernoulli(density) {
                    row.push((c, rng.uniform(-1.0, 1.0)));
                }
            }
            data.push(row);
        }
        SparseMatrix::from_sorted_rows(rows, cols, data)
    }

    /// Naive triple-loop product, the independent oracle for both kernels.
    fn matmul_oracle(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for k in 0..a.cols() {
                    acc += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    #[test]
    fn spmm_identity_passthrough() {
        let s = SparseMatrix::identity(2);
        let m = DenseMatrix::from_vec(2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let out = spmm(&s, &m).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn spmm_zero_matrix() {
        let s = SparseMatrix::zero(2, 2);
        let m = DenseMatrix::from_vec(2, 3, vec![1.0; 6]).unwrap();
        let out = spmm(&s, &m).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spmm_matches_dense_oracle() {
        let mut rng = Rng::seed_from_u64(11);
        let s = random_sparse(&mut rng, 5, 5, 0.3);
        let m = random_dense(&mut rng, 5, 3);
        let got = spmm(&s, &m).unwrap();
        let want = matmul_oracle(&s.to_dense(), &m);
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn spmm_shape_mismatch_names_both_shapes() {
        let s = SparseMatrix::identity(2);
        let m = DenseMatrix::zeros(3, 1);
        let err = spmm(&s, &m).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x2") && msg.contains("3x1"), "{msg}");
    }

    #[test]
    fn gemm_transposed_dot() {
        let a = DenseMatrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let b = DenseMatrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let out = gemm(&a, &b, true).unwrap();
        assert_eq!(out.shape(), (1, 1));
        assert_eq!(out.get(0, 0), 5.0);
    }

    #[test]
    fn gemm_identity_passthrough() {
        let a = DenseMatrix::identity(3);
        let mut rng = Rng::seed_from_u64(5);
        let b = random_dense(&mut rng, 3, 4);
        let out = gemm(&a, &b, false).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn gemm_matches_dense_oracle() {
        let mut rng = Rng::seed_from_u64(17);
        let a = random_dense(&mut rng, 4, 6);
        let b = random_dense(&mut rng, 6, 2);
        let got = gemm(&a, &b, false).unwrap();
        let want = matmul_oracle(&a, &b);
        assert!(got.max_abs_diff(&want) < 1e-12);

        let bt = b.transpose();
        let got_t = gemm(&a, &bt, true).unwrap();
        assert!(got_t.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn gemm_tn_matches_oracle() {
        let mut rng = Rng::seed_from_u64(23);
        let a = random_dense(&mut rng, 5, 3);
        let b = random_dense(&mut rng, 5, 4);
        let got = gemm_tn(&a, &b).unwrap();
        let want = matmul_oracle(&a.transpose(), &b);
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn gemm_shape_mismatch() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        assert!(gemm(&a, &b, false).is_err());
        assert!(gemm(&a, &b, true).is_ok());
    }

    #[test]
    fn relu_clamps_negatives() {
        let m = DenseMatrix::from_vec(1, 3, vec![-3.0, 0.0, 2.0]).unwrap();
        let out = map_elementwise(&m, Activation::Relu);
        assert_eq!(out.values(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn sigmoid_at_zero_is_half() {
        let m = DenseMatrix::from_vec(1, 1, vec![0.0]).unwrap();
        let out = map_elementwise(&m, Activation::Sigmoid);
        assert_eq!(out.get(0, 0), 0.5);
    }

    #[test]
    fn sigmoid_symmetry() {
        let mut rng = Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = rng.uniform(-30.0, 30.0);
            assert!((sigmoid(-x) - (1.0 - sigmoid(x))).abs() < 1e-12);
        }
    }

    #[test]
    fn softplus_is_stable_at_extremes() {
        assert_eq!(softplus(-1000.0), 0.0);
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-12);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn csr_invariants_rejected() {
        // offsets not starting at zero
        assert!(SparseMatrix::new(1, 2, vec![1, 1], vec![], vec![]).is_err());
        // decreasing offsets
        assert!(SparseMatrix::new(2, 2, vec![0, 2, 1], vec![0, 1, 0], vec![1.0; 3]).is_err());
        // unsorted columns within a row
        assert!(SparseMatrix::new(1, 3, vec![0, 2], vec![2, 0], vec![1.0, 1.0]).is_err());
        // duplicate column
        assert!(SparseMatrix::new(1, 3, vec![0, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
        // column out of bounds
        assert!(SparseMatrix::new(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        // non-finite value
        assert!(SparseMatrix::new(1, 2, vec![0, 1], vec![0], vec![f64::NAN]).is_err());
        // well-formed
        assert!(SparseMatrix::new(2, 2, vec![0, 1, 2], vec![0, 1], vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn triplet_duplicates_rejected() {
        let t = [(0, 0, 1.0), (0, 0, 2.0)];
        assert!(SparseMatrix::from_triplets(1, 1, &t).is_err());
    }

    #[test]
    fn dense_ctor_validates() {
        assert!(DenseMatrix::from_vec(2, 2, vec![0.0; 3]).is_err());
        assert!(DenseMatrix::from_vec(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn transpose_round_trip() {
        let mut rng = Rng::seed_from_u64(8);
        let s = random_sparse(&mut rng, 6, 4, 0.4);
        assert_eq!(s.transpose().transpose(), s);
        let d = s.to_dense();
        assert!(s.transpose().to_dense().max_abs_diff(&d.transpose()) == 0.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn dense_strategy(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
            proptest::collection::vec(-10.0..10.0f64, rows * cols)
                .prop_map(move |v| DenseMatrix::from_raw(rows, cols, v))
        }

        fn sparse_strategy(rows: usize, cols: usize) -> impl Strategy<Value = SparseMatrix> {
            proptest::collection::vec(proptest::option::weighted(0.35, -5.0..5.0f64), rows * cols)
                .prop_map(move |cells| {
                    let mut data = vec![Vec::new(); rows];
                    for (flat, cell) in cells.into_iter().enumerate() {
                        if let Some(v) = cell {
                            data[flat / cols].push((flat % cols, v));
                        }
                    }
                    SparseMatrix::from_sorted_rows(rows, cols, data)
                })
        }

        proptest! {
            #[test]
            fn spmm_by_identity_is_to_dense(s in sparse_strategy(5, 4)) {
                let i = DenseMatrix::identity(4);
                let out = spmm(&s, &i).unwrap();
                prop_assert!(out.max_abs_diff(&s.to_dense()) == 0.0);
            }

            #[test]
            fn spmm_gemm_associativity(
                s in sparse_strategy(4, 4),
                a in dense_strategy(4, 3),
                b in dense_strategy(3, 2),
            ) {
                let left = spmm(&s, &gemm(&a, &b, false).unwrap()).unwrap();
                let right = gemm(&spmm(&s, &a).unwrap(), &b, false).unwrap();
                prop_assert!(left.max_abs_diff(&right) < 1e-9);
            }

            #[test]
            fn sigmoid_open_interval_and_relu_idempotent(m in dense_strategy(3, 5)) {
                let sg = map_elementwise(&m, Activation::Sigmoid);
                prop_assert!(sg.values().iter().all(|&v| v > 0.0 && v < 1.0));
                let r = map_elementwise(&m, Activation::Relu);
                let rr = map_elementwise(&r, Activation::Relu);
                prop_assert!(r.values().iter().all(|&v| v >= 0.0));
                prop_assert_eq!(r, rr);
            }
        }
    }
}
