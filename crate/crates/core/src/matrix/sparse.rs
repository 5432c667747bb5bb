use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::DenseMatrix;

/// Compressed-sparse-row matrix.
///
/// Invariants (checked by [`SparseMatrix::new`]): `indptr` has length
/// `rows + 1`, starts at 0 and is nondecreasing; column indices are strictly
/// increasing within each row and `< cols`; stored values are finite and
/// nonzero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize, indptr: Vec<usize>, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indptr.len() != rows + 1 || indptr[0] != 0 {
            return Err(invalid!("row offsets must have length {} and start at 0", rows + 1));
        }
        if indices.len() != values.len() || *indptr.last().unwrap() != indices.len() {
            return Err(invalid!("row offsets, indices and values disagree on nnz"));
        }
        for i in 0..rows {
            let (s, e) = (indptr[i], indptr[i + 1]);
            if e < s {
                return Err(invalid!("row offsets decrease at row {i}"));
            }
            let row = &indices[s..e];
            if row.iter().any(|&j| j >= cols) {
                return Err(invalid!("column index out of range in row {i}"));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid!("column indices not strictly increasing in row {i}"));
            }
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite() || *v == 0.0) {
            return Err(invalid!("stored value #{p} is zero or non-finite"));
        }
        Ok(SparseMatrix { rows, cols, indptr, indices, values })
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// resulting zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = triplets.to_vec();
        if let Some(&(i, j, _)) = t.iter().find(|&&(i, j, _)| i >= rows || j >= cols) {
            return Err(invalid!("triplet ({i}, {j}) outside {rows}x{cols}"));
        }
        if t.iter().any(|x| !x.2.is_finite()) {
            return Err(invalid!("non-finite triplet value"));
        }
        t.sort_by_key(|e| (e.0, e.1));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut k = 0;
        while k < t.len() {
            let (i, j, mut v) = t[k];
            k += 1;
            while k < t.len() && t[k].0 == i && t[k].1 == j {
                v += t[k].2;
                k += 1;
            }
            if v != 0.0 {
                indptr[i + 1] += 1;
                indices.push(j);
                values.push(v);
            }
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Self::new(rows, cols, indptr, indices, values)
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut indptr = Vec::with_capacity(a.nrows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..a.nrows() {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        SparseMatrix { rows: a.nrows(), cols: a.ncols(), indptr, indices, values }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, indptr: vec![0; rows + 1], indices: Vec::new(), values: Vec::new() }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row_entries(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.rows {
            let (cols, vals) = self.row_entries(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let p = next[j];
                indices[p] = i;
                values[p] = v;
                next[j] += 1;
            }
        }
        SparseMatrix { rows: self.cols, cols: self.rows, indptr: counts, indices, values }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (cols, vals) = self.row_entries(i);
            let row = out.row_mut(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        out
    }
}
