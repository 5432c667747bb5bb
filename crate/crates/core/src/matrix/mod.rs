//! Matrix storage, the shared access trait and exact dense kernels.

mod dense;
pub mod linalg;
mod sparse;

use alloc::vec;
use alloc::vec::Vec;

pub use dense::DenseMatrix;
pub(crate) use dense::mul_views;
pub use sparse::SparseMatrix;

use crate::error::{Error, Result};

/// Read access shared by dense and sparse matrices.
///
/// Algorithms are written once against this trait. Products with dense
/// right-hand sides cost `O(nnz · p)` for sparse storage.
pub trait Matrix {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// Stored entries (all entries for dense storage).
    fn nnz(&self) -> usize;
    fn is_sparse(&self) -> bool;
    /// Visits stored entries in row-major order.
    fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, usize, f64));
    fn row_dense(&self, i: usize) -> Vec<f64>;
    fn col_dense(&self, j: usize) -> Vec<f64>;
    fn matvec(&self, x: &[f64]) -> Vec<f64>;
    /// `A · X`.
    fn mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix>;
    /// `Aᵀ · X`.
    fn tr_mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix>;
    /// Dense `m x idx.len()` copy of the given columns (repeats allowed).
    fn select_columns(&self, idx: &[usize]) -> DenseMatrix;
    /// Dense `idx.len() x n` copy of the given rows (repeats allowed).
    fn select_rows(&self, idx: &[usize]) -> DenseMatrix;
    fn col_norms_sq(&self) -> Vec<f64>;
    fn row_norms_sq(&self) -> Vec<f64>;
    fn frobenius_sq(&self) -> f64;
    fn to_dense(&self) -> DenseMatrix;
}

fn check_rows(op: &'static str, expect: usize, x: &DenseMatrix) -> Result<()> {
    if x.nrows() != expect {
        return Err(Error::DimensionMismatch { op, expected: (expect, x.ncols()), found: x.shape() });
    }
    Ok(())
}

impl Matrix for DenseMatrix {
    fn nrows(&self) -> usize {
        DenseMatrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        DenseMatrix::ncols(self)
    }
    fn nnz(&self) -> usize {
        self.nrows() * self.ncols()
    }
    fn is_sparse(&self) -> bool {
        false
    }
    fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        for i in 0..self.nrows() {
            for (j, &v) in self.row(i).iter().enumerate() {
                if v != 0.0 {
                    f(i, j, v);
                }
            }
        }
    }
    fn row_dense(&self, i: usize) -> Vec<f64> {
        self.row(i).to_vec()
    }
    fn col_dense(&self, j: usize) -> Vec<f64> {
        self.col(j)
    }
    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }
    fn mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.matmul(x)
    }
    fn tr_mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.tr_matmul(x)
    }
    fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        self.columns(idx)
    }
    fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        self.rows_at(idx)
    }
    fn col_norms_sq(&self) -> Vec<f64> {
        DenseMatrix::col_norms_sq(self)
    }
    fn row_norms_sq(&self) -> Vec<f64> {
        DenseMatrix::row_norms_sq(self)
    }
    fn frobenius_sq(&self) -> f64 {
        DenseMatrix::frobenius_sq(self)
    }
    fn to_dense(&self) -> DenseMatrix {
        self.clone()
    }
}

impl Matrix for SparseMatrix {
    fn nrows(&self) -> usize {
        SparseMatrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        SparseMatrix::ncols(self)
    }
    fn nnz(&self) -> usize {
        SparseMatrix::nnz(self)
    }
    fn is_sparse(&self) -> bool {
        true
    }
    fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        for i in 0..self.nrows() {
            let (cols, vals) = self.row_entries(i);
            for (&j, &v) in cols.iter().zip(vals) {
                f(i, j, v);
            }
        }
    }
    fn row_dense(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols()];
        let (cols, vals) = self.row_entries(i);
        for (&j, &v) in cols.iter().zip(vals) {
            out[j] = v;
        }
        out
    }
    fn col_dense(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        for (i, o) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row_entries(i);
            if let Ok(p) = cols.binary_search(&j) {
                *o = vals[p];
            }
        }
        out
    }
    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows())
            .map(|i| {
                let (cols, vals) = self.row_entries(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }
    fn mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        check_rows("sparse mul_dense", self.ncols(), x)?;
        let mut out = DenseMatrix::zeros(self.nrows(), x.ncols());
        for i in 0..self.nrows() {
            let (cols, vals) = self.row_entries(i);
            let dst = out.row_mut(i);
            for (&j, &v) in cols.iter().zip(vals) {
                for (d, s) in dst.iter_mut().zip(x.row(j)) {
                    *d += v * s;
                }
            }
        }
        Ok(out)
    }
    fn tr_mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        check_rows("sparse tr_mul_dense", self.nrows(), x)?;
        let mut out = DenseMatrix::zeros(self.ncols(), x.ncols());
        for i in 0..self.nrows() {
            let (cols, vals) = self.row_entries(i);
            let src = x.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                for (d, s) in out.row_mut(j).iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
        Ok(out)
    }
    fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        // head[j] chains the output slots that request column j.
        let mut head = vec![usize::MAX; self.ncols()];
        let mut next = vec![usize::MAX; idx.len()];
        for (slot, &j) in idx.iter().enumerate().rev() {
            next[slot] = head[j];
            head[j] = slot;
        }
        let mut out = DenseMatrix::zeros(self.nrows(), idx.len());
        for i in 0..self.nrows() {
            let (cols, vals) = self.row_entries(i);
            let dst = out.row_mut(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let mut slot = head[j];
                while slot != usize::MAX {
                    dst[slot] = v;
                    slot = next[slot];
                }
            }
        }
        out
    }
    fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(idx.len(), self.ncols());
        for (r, &i) in idx.iter().enumerate() {
            let (cols, vals) = self.row_entries(i);
            let dst = out.row_mut(r);
            for (&j, &v) in cols.iter().zip(vals) {
                dst[j] = v;
            }
        }
        out
    }
    fn col_norms_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols()];
        for (&j, &v) in self.indices().iter().zip(self.values()) {
            out[j] += v * v;
        }
        out
    }
    fn row_norms_sq(&self) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.row_entries(i).1.iter().map(|v| v * v).sum()).collect()
    }
    fn frobenius_sq(&self) -> f64 {
        self.values().iter().map(|v| v * v).sum()
    }
    fn to_dense(&self) -> DenseMatrix {
        SparseMatrix::to_dense(self)
    }
}

/// Explicit transpose for either storage.
pub fn transpose_of(a: &dyn Matrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.ncols(), a.nrows());
    a.for_each_nonzero(&mut |i, j, v| out[(j, i)] = v);
    out
}
