//! Nonzero-support view of dense matrix rows.
//!
//! Neighbor search, k-means, and the pairwise metrics all reduce to row dot
//! products. Iterating only the nonzero entries makes those products cheap
//! on the near-binary feature matrices this crate works with, while dense
//! rows take the same code path at full cost.

use crate::tensor::DenseMatrix;

pub(crate) struct Supports {
    pub cols: usize,
    /// `(column, value)` pairs per row, sorted by column.
    pub entries: Vec<Vec<(usize, f64)>>,
    /// Squared Euclidean norm per row.
    pub sq_norms: Vec<f64>,
}

impl Supports {
    pub fn build(x: &DenseMatrix) -> Self {
        let entries: Vec<Vec<(usize, f64)>> = (0..x.rows())
            .map(|i| {
                x.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(c, &v)| (c, v))
                    .collect()
            })
            .collect();
        let sq_norms = entries
            .iter()
            .map(|row| row.iter().map(|(_, v)| v * v).sum())
            .collect();
        Supports {
            cols: x.cols(),
            entries,
            sq_norms,
        }
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    /// Writes row `i` into a dense scratch buffer.
    #[inline]
    pub fn scatter(&self, i: usize, scratch: &mut [f64]) {
        for &(c, v) in &self.entries[i] {
            scratch[c] = v;
        }
    }

    /// Zeroes the entries of row `i` previously scattered.
    #[inline]
    pub fn clear(&self, i: usize, scratch: &mut [f64]) {
        for &(c, _) in &self.entries[i] {
            scratch[c] = 0.0;
        }
    }

    /// Dot product of row `j` against a scattered row held in `scratch`.
    #[inline]
    pub fn dot_with_scratch(&self, scratch: &[f64], j: usize) -> f64 {
        let mut dot = 0.0;
        for &(c, v) in &self.entries[j] {
            dot += scratch[c] * v;
        }
        dot
    }

    /// Squared Euclidean distance between scattered row `i` and row `j`.
    #[inline]
    pub fn sq_dist_via_scratch(&self, scratch: &[f64], i: usize, j: usize) -> f64 {
        let dot = self.dot_with_scratch(scratch, j);
        (self.sq_norms[i] + self.sq_norms[j] - 2.0 * dot).max(0.0)
    }

    /// Dot product of row `i` against an arbitrary dense row.
    #[inline]
    pub fn dot_dense(&self, i: usize, row: &[f64]) -> f64 {
        let mut dot = 0.0;
        for &(c, v) in &self.entries[i] {
            dot += row[c] * v;
        }
        dot
    }

    /// Squared Euclidean distance between row `i` and a dense row with
    /// precomputed squared norm.
    #[inline]
    pub fn sq_dist_to_dense(&self, i: usize, row: &[f64], row_sq: f64) -> f64 {
        (self.sq_norms[i] + row_sq - 2.0 * self.dot_dense(i, row)).max(0.0)
    }
}
