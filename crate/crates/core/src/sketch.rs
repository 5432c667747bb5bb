//! Sparse subspace embeddings and ±1/√s sign sketches.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::matrix::{DenseMatrix, Matrix, SparseMatrix};

/// Default constant in the embedding dimensions below.
pub const SSE_CONSTANT: f64 = 40.0;

/// `⌈c·ρ²/ε²⌉`: dimension for a subspace embedding of a rank-`ρ` space.
pub fn sse_dim_subspace(rho: usize, eps: f64, c: f64) -> usize {
    math::ceil_usize(c * (rho * rho) as f64 / (eps * eps)).max(1)
}

/// `⌈c/ε²⌉`: dimension for Frobenius-norm preservation only.
pub fn sse_dim_frobenius(eps: f64, c: f64) -> usize {
    math::ceil_usize(c / (eps * eps)).max(1)
}

/// `W = ΨY`: source index `i` lands in bucket `h(i)` with sign `y(i)`.
///
/// Stored implicitly as `(h, y)`; never densified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseEmbedding {
    xi: usize,
    buckets: Vec<usize>,
    signs: Vec<f64>,
}

/// `W·A` restricted to the buckets that received at least one source index.
///
/// Empty buckets give identically zero rows, so dropping them leaves every
/// norm, Gram matrix and least-squares solution unchanged while keeping the
/// result at most `min(ξ, n)` rows tall.
#[derive(Clone, Debug)]
pub struct CompactSketch {
    /// Bucket id of each stored row, ascending.
    pub buckets: Vec<usize>,
    pub mat: DenseMatrix,
}

pub fn make_sse<R: Rng + ?Sized>(n: usize, xi: usize, rng: &mut R) -> Result<SparseEmbedding> {
    if xi == 0 {
        return Err(invalid!("embedding dimension must be at least 1"));
    }
    let mut buckets = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    for _ in 0..n {
        buckets.push(rng.random_range(0..xi));
        signs.push(if rng.random::<bool>() { 1.0 } else { -1.0 });
    }
    Ok(SparseEmbedding { xi, buckets, signs })
}

impl SparseEmbedding {
    pub fn target_dim(&self) -> usize {
        self.xi
    }

    pub fn source_dim(&self) -> usize {
        self.buckets.len()
    }

    pub fn bucket(&self, i: usize) -> usize {
        self.buckets[i]
    }

    pub fn sign(&self, i: usize) -> f64 {
        self.signs[i]
    }

    /// Dense `ξ x n` operator, for tests on small dimensions.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut w = DenseMatrix::zeros(self.xi, self.source_dim());
        for (i, (&h, &s)) in self.buckets.iter().zip(&self.signs).enumerate() {
            w[(h, i)] = s;
        }
        w
    }

    fn check(&self, a: &dyn Matrix) -> Result<()> {
        if a.nrows() != self.source_dim() {
            return Err(Error::DimensionMismatch {
                op: "apply_sse",
                expected: (self.source_dim(), a.ncols()),
                found: (a.nrows(), a.ncols()),
            });
        }
        Ok(())
    }

    /// Occupied buckets (ascending) and each source index's compact row.
    fn compaction(&self) -> (Vec<usize>, Vec<usize>) {
        let mut occupied = self.buckets.clone();
        occupied.sort_unstable();
        occupied.dedup();
        let row_of = self.buckets.iter().map(|b| occupied.binary_search(b).unwrap()).collect();
        (occupied, row_of)
    }

    /// `W·A` as a compact dense sketch; one pass over the stored entries of `A`.
    pub fn apply_compact(&self, a: &dyn Matrix) -> Result<CompactSketch> {
        self.check(a)?;
        let (occupied, row_of) = self.compaction();
        let mut out = DenseMatrix::zeros(occupied.len(), a.ncols());
        a.for_each_nonzero(&mut |i, j, v| out[(row_of[i], j)] += self.signs[i] * v);
        Ok(CompactSketch { buckets: occupied, mat: out })
    }

    /// `W·A` as a compact sparse sketch.
    pub fn apply_sparse(&self, a: &dyn Matrix) -> Result<SparseMatrix> {
        self.check(a)?;
        let (occupied, row_of) = self.compaction();
        let mut trip = Vec::with_capacity(a.nnz());
        a.for_each_nonzero(&mut |i, j, v| trip.push((row_of[i], j, self.signs[i] * v)));
        SparseMatrix::from_triplets(occupied.len(), a.ncols(), &trip)
    }
}

/// `W·A` as a full `ξ x n` dense matrix.
pub fn apply_sse(w: &SparseEmbedding, a: &dyn Matrix) -> Result<DenseMatrix> {
    w.check(a)?;
    let mut out = DenseMatrix::zeros(w.xi, a.ncols());
    a.for_each_nonzero(&mut |i, j, v| out[(w.buckets[i], j)] += w.signs[i] * v);
    Ok(out)
}

/// `s x m` matrix with i.i.d. entries `±1/√s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignSketch {
    rows: usize,
    cols: usize,
    positive: Vec<bool>,
}

impl SignSketch {
    pub fn new<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let positive = (0..rows * cols).map(|_| rng.random::<bool>()).collect();
        SignSketch { rows, cols, positive }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let v = 1.0 / math::sqrt(self.rows as f64);
        let data = self.positive.iter().map(|&p| if p { v } else { -v }).collect();
        DenseMatrix::from_vec(self.rows, self.cols, data).expect("finite by construction")
    }

    /// `S·A`.
    pub fn apply(&self, a: &dyn Matrix) -> Result<DenseMatrix> {
        if a.nrows() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "sign sketch",
                expected: (self.cols, a.ncols()),
                found: (a.nrows(), a.ncols()),
            });
        }
        Ok(a.tr_mul_dense(&self.to_dense().transpose())?.transpose())
    }

    /// `A·Sᵀ`.
    pub fn apply_right(&self, a: &dyn Matrix) -> Result<DenseMatrix> {
        if a.ncols() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "sign sketch (right)",
                expected: (a.nrows(), self.cols),
                found: (a.nrows(), a.ncols()),
            });
        }
        a.mul_dense(&self.to_dense().transpose())
    }
}

/// Row count `⌈8(4 + 2β)·ln n⌉` preserving `n` column norms within `[½, 3/2]`.
pub fn jlt_rows(n: usize, beta: f64) -> usize {
    math::ceil_usize(8.0 * (4.0 + 2.0 * beta) * math::ln(n as f64))
}

/// `S·B` with `S` a sign sketch of [`jlt_rows`]`(B.ncols(), β)` rows.
pub fn jlt<R: Rng + ?Sized>(b: &dyn Matrix, beta: f64, rng: &mut R) -> Result<DenseMatrix> {
    if !(beta > 0.0) {
        return Err(invalid!("beta must be positive"));
    }
    if b.ncols() < 2 {
        return Err(invalid!("jlt needs at least two columns"));
    }
    let s = SignSketch::new(jlt_rows(b.ncols(), beta), b.nrows(), rng);
    s.apply(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::linalg::{orthonormalize, singular_values};
    use crate::rng_from_seed;

    fn random(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = rng_from_seed(seed);
        DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn one_nonzero_per_column() {
        let mut rng = rng_from_seed(1);
        for n in [1, 2, 17, 300] {
            let w = make_sse(n, 7, &mut rng).unwrap().to_dense();
            for j in 0..n {
                let col = w.col(j);
                assert_eq!(col.iter().filter(|&&x| x != 0.0).count(), 1);
                assert!(col.iter().all(|&x| x == 0.0 || x.abs() == 1.0));
            }
        }
        assert!(make_sse(3, 0, &mut rng).is_err());
    }

    #[test]
    fn seed_repeat_gives_same_operator() {
        let a = make_sse(50, 9, &mut rng_from_seed(5)).unwrap();
        let b = make_sse(50, 9, &mut rng_from_seed(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn apply_matches_dense_product() {
        let w = make_sse(20, 6, &mut rng_from_seed(2)).unwrap();
        let a = random(20, 4, 3);
        let expect = w.to_dense().matmul(&a).unwrap();
        assert_eq!(apply_sse(&w, &a).unwrap(), expect);
        let c = w.apply_compact(&a).unwrap();
        for (r, &b) in c.buckets.iter().enumerate() {
            assert_eq!(c.mat.row(r), expect.row(b));
        }
        let s = w.apply_sparse(&SparseMatrix::from_dense(&a)).unwrap();
        assert_eq!(s.to_dense(), c.mat);
    }

    #[test]
    fn single_nonzero_lands_in_its_bucket() {
        let w = make_sse(5, 4, &mut rng_from_seed(4)).unwrap();
        let a = SparseMatrix::from_triplets(5, 3, &[(2, 1, 1.0)]).unwrap();
        let out = apply_sse(&w, &a).unwrap();
        assert_eq!(out[(w.bucket(2), 1)], w.sign(2));
        assert_eq!(out.frobenius_sq(), 1.0);
        assert_eq!(apply_sse(&w, &DenseMatrix::zeros(5, 3)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn frobenius_preserved_monte_carlo() {
        let a = random(500, 4, 6);
        let f = a.frobenius_sq();
        let ok = (0..100)
            .filter(|&s| {
                let w = make_sse(500, 400, &mut rng_from_seed(100 + s)).unwrap();
                let r = w.apply_compact(&a).unwrap().mat.frobenius_sq() / f;
                (0.5..=1.5).contains(&r)
            })
            .count();
        assert!(ok >= 95, "{ok}");
    }

    #[test]
    fn subspace_embedding_monte_carlo() {
        let eps = 0.5;
        let mut ok = 0;
        for s in 0..100u64 {
            let rho = 1 + (s as usize % 5);
            let basis = orthonormalize(&random(300, rho, 1000 + s)).unwrap();
            let w = make_sse(300, sse_dim_subspace(rho, eps, SSE_CONSTANT), &mut rng_from_seed(2000 + s)).unwrap();
            let sv = singular_values(&w.apply_compact(&basis).unwrap().mat).unwrap();
            if sv[0] <= 1.0 + eps && sv[rho - 1] >= 1.0 - eps {
                ok += 1;
            }
        }
        assert!(ok >= 95, "{ok}");
    }

    #[test]
    fn sketched_regression_monte_carlo() {
        use crate::matrix::linalg::RangeFactor;
        let eps = 0.5;
        let a = random(300, 4, 7);
        let b = random(300, 2, 8);
        let cost = |x: &DenseMatrix| a.matmul(x).unwrap().sub(&b).unwrap().frobenius_sq();
        let best = cost(&RangeFactor::new(&a).unwrap().pinv_mul(&b).unwrap());
        let xi = sse_dim_subspace(5, eps, SSE_CONSTANT);
        let mut ok = 0;
        for s in 0..100u64 {
            let w = make_sse(300, xi, &mut rng_from_seed(3000 + s)).unwrap();
            let ab = a.hstack(&b).unwrap();
            let sk = w.apply_compact(&ab).unwrap().mat;
            let (wa, wb) = (sk.col_range(0, 4), sk.col_range(4, 6));
            let x = RangeFactor::new(&wa).unwrap().pinv_mul(&wb).unwrap();
            if cost(&x) <= (1.0 + eps) * best {
                ok += 1;
            }
        }
        assert!(ok >= 90, "{ok}");
    }

    #[test]
    fn jlt_row_count_formula() {
        assert_eq!(jlt_rows(100, 1.0), (48.0 * 100f64.ln()).ceil() as usize);
        assert_eq!(jlt_rows(100, 1.0), 222);
    }

    #[test]
    fn jlt_entries_and_zero() {
        let s = SignSketch::new(10, 7, &mut rng_from_seed(9)).to_dense();
        let v = 1.0 / 10f64.sqrt();
        assert!(s.as_slice().iter().all(|&x| x == v || x == -v));
        let z = jlt(&DenseMatrix::zeros(30, 5), 1.0, &mut rng_from_seed(1)).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        assert!(jlt(&DenseMatrix::zeros(3, 1), 1.0, &mut rng_from_seed(1)).is_err());
    }

    #[test]
    fn jlt_column_norms_monte_carlo() {
        let b = random(300, 50, 10);
        let truth = b.col_norms_sq();
        let ok = (0..100)
            .filter(|&s| {
                let sb = jlt(&b, 1.0, &mut rng_from_seed(500 + s)).unwrap();
                sb.col_norms_sq().iter().zip(&truth).all(|(x, t)| (0.5..=1.5).contains(&(x / t)))
            })
            .count();
        assert!(ok >= 99, "{ok}");
    }
}
