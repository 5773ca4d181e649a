//! Dense row-major containers for the n×n quantities shared by the
//! statistics and the bootstrap.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix buffer length mismatch");
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices; all rows must share a length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Fills a matrix row by row; the closure receives the row index and the
    /// mutable row buffer. Rows are filled in parallel.
    pub fn par_from_fn<F>(rows: usize, cols: usize, fill: F) -> Self
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        use rayon::prelude::*;
        let mut m = Self::zeros(rows, cols);
        if cols > 0 {
            m.data
                .par_chunks_mut(cols)
                .enumerate()
                .for_each(|(i, row)| fill(i, row));
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `self · rhs`, skipping zero entries of `self`. Kernel matrices are
    /// sparse under compact support, which makes the skip worthwhile. Each
    /// output entry is correctly rounded, so it depends neither on the thread
    /// count nor on the order of the inner index.
    pub fn sparse_left_mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        Matrix::par_from_fn(self.rows, rhs.cols, |i, out| {
            let nz: Vec<(usize, f64)> = self
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0.0)
                .map(|(k, &w)| (k, w))
                .collect();
            let mut buf = Vec::with_capacity(nz.len());
            for (j, o) in out.iter_mut().enumerate() {
                buf.clear();
                buf.extend(nz.iter().map(|&(k, w)| w * rhs.get(k, j)).filter(|t| *t != 0.0));
                *o = exact_sum(&mut buf);
            }
        })
    }
}

/// Correctly rounded sum of `terms`, independent of their order. The
/// buffer is overwritten.
pub fn exact_sum(terms: &mut [f64]) -> f64 {
    match terms.len() {
        0 => 0.0,
        1 => terms[0],
        _ => accurate::sum::i_fast_sum_in_place(terms),
    }
}

/// Boolean n×n matrix, used for the orthant indicators 1(A_i ≤ A_j).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl Mask {
    /// `out[i][j] = 1(points_i ≤ points_j)` componentwise, ties included.
    pub fn orthant(points: &Matrix) -> Self {
        let n = points.rows();
        let mut data = vec![false; n * n];
        for i in 0..n {
            let pi = points.row(i);
            for j in 0..n {
                data[i * n + j] = pi.iter().zip(points.row(j)).all(|(a, b)| a <= b);
            }
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[bool] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}
