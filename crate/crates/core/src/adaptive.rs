//! Adaptive sampling by residual norms: exact, sketched (input-sparsity)
//! and derandomized variants.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::matrix::linalg::{svd, RangeFactor, RowSpaceFactor};
use crate::matrix::{DenseMatrix, Matrix};
use crate::sketch::{jlt_rows, SignSketch};

/// Residuals below `1e-12·‖A‖_F` (in norm) are treated as zero.
pub const ZERO_RESIDUAL_RATIO_SQ: f64 = 1e-24;

const BLOCK: usize = 256;

/// Sampling distribution over residual norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualDistribution {
    pub p: Vec<f64>,
    /// Floor factor: `pᵢ ≥ α‖bᵢ‖²/‖B‖_F²` for the residual `B`.
    pub alpha: f64,
    /// `‖B‖_F²` (or its sketched estimate).
    pub residual_sq: f64,
    /// The residual was zero and `p` is uniform.
    pub uniform_fallback: bool,
}

/// Indices drawn i.i.d. from a [`ResidualDistribution`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveDraw {
    pub indices: Vec<usize>,
    pub distribution: ResidualDistribution,
}

fn distribution(norms: Vec<f64>, reference_sq: f64, alpha: f64) -> ResidualDistribution {
    let total: f64 = norms.iter().sum();
    let n = norms.len();
    if !(total > ZERO_RESIDUAL_RATIO_SQ * reference_sq) {
        return ResidualDistribution { p: vec![1.0 / n as f64; n], alpha, residual_sq: total, uniform_fallback: true };
    }
    let p = norms.iter().map(|v| v / total).collect();
    ResidualDistribution { p, alpha, residual_sq: total, uniform_fallback: false }
}

fn draw<R: Rng + ?Sized>(dist: ResidualDistribution, count: usize, rng: &mut R) -> Result<AdaptiveDraw> {
    let w = WeightedIndex::new(&dist.p).map_err(|e| invalid!("bad residual distribution: {e}"))?;
    let indices = (0..count).map(|_| w.sample(rng)).collect();
    Ok(AdaptiveDraw { indices, distribution: dist })
}

fn check_count(count: usize, alpha: f64) -> Result<()> {
    if count == 0 {
        return Err(invalid!("sample count must be at least 1"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid!("alpha must lie in (0, 1], got {alpha}"));
    }
    Ok(())
}

fn check_rows(op: &'static str, a: &dyn Matrix, v: &DenseMatrix) -> Result<()> {
    if v.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch { op, expected: (a.nrows(), v.ncols()), found: v.shape() });
    }
    Ok(())
}

fn check_cols(op: &'static str, a: &dyn Matrix, r: &DenseMatrix) -> Result<()> {
    if r.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch { op, expected: (r.nrows(), a.ncols()), found: r.shape() });
    }
    Ok(())
}

/// Orthonormal basis of range(`v`).
pub fn column_basis(v: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(RangeFactor::new(v)?.q().clone())
}

/// Squared column norms of `(I − QQᵀ)A`, in column blocks.
pub fn residual_col_norms(a: &dyn Matrix, q: &DenseMatrix) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(a.ncols());
    let mut start = 0;
    while start < a.ncols() {
        let end = (start + BLOCK).min(a.ncols());
        let idx: Vec<usize> = (start..end).collect();
        let block = a.select_columns(&idx);
        let res = if q.ncols() == 0 { block } else { block.sub(&q.matmul(&q.tr_matmul(&block)?)?)? };
        out.extend(res.col_norms_sq());
        start = end;
    }
    Ok(out)
}

/// Squared row norms of `A(I − QQᵀ)`, in row blocks (`q` is `n x ρ`).
pub fn residual_row_norms(a: &dyn Matrix, q: &DenseMatrix) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(a.nrows());
    let mut start = 0;
    while start < a.nrows() {
        let end = (start + BLOCK).min(a.nrows());
        let idx: Vec<usize> = (start..end).collect();
        let block = a.select_rows(&idx);
        let res = if q.ncols() == 0 { block } else { block.sub(&block.matmul(q)?.matmul_tr(q)?)? };
        out.extend(res.row_norms_sq());
        start = end;
    }
    Ok(out)
}

/// `c₂` column draws from `pⱼ = ‖bⱼ‖²/‖B‖_F²` with `B = A − VV†A`.
///
/// Exact norms satisfy every floor `α ≤ 1`; `α` is recorded.
pub fn adaptive_cols<R: Rng + ?Sized>(
    a: &dyn Matrix,
    v: &DenseMatrix,
    alpha: f64,
    c2: usize,
    rng: &mut R,
) -> Result<AdaptiveDraw> {
    check_count(c2, alpha)?;
    check_rows("adaptive_cols", a, v)?;
    let q = column_basis(v)?;
    let norms = residual_col_norms(a, &q)?;
    draw(distribution(norms, a.frobenius_sq(), alpha), c2, rng)
}

/// `r₂` row draws from the squared row norms of `B = A − AR₁†R₁`.
///
/// `v` (`m x c`) enters only the guarantee, not the distribution; its
/// shape is validated.
pub fn adaptive_rows<R: Rng + ?Sized>(
    a: &dyn Matrix,
    v: &DenseMatrix,
    r1: &DenseMatrix,
    r2: usize,
    rng: &mut R,
) -> Result<AdaptiveDraw> {
    check_count(r2, 1.0)?;
    check_rows("adaptive_rows", a, v)?;
    check_cols("adaptive_rows", a, r1)?;
    let q = RowSpaceFactor::new(r1)?.basis().clone();
    let norms = residual_row_norms(a, &q)?;
    draw(distribution(norms, a.frobenius_sq(), 1.0), r2, rng)
}

/// Column draws from the norms of `B̃ = S·A − (S·V)(V†A)`, with `S` a sign
/// sketch of [`jlt_rows`]`(n, 1)` rows. `B` itself is never formed.
pub fn adaptive_cols_sparse<R: Rng + ?Sized>(
    a: &dyn Matrix,
    v: &DenseMatrix,
    c2: usize,
    rng: &mut R,
) -> Result<AdaptiveDraw> {
    check_count(c2, 1.0)?;
    check_rows("adaptive_cols_sparse", a, v)?;
    let q = column_basis(v)?;
    let s = SignSketch::new(jlt_rows(a.ncols().max(2), 1.0), a.nrows(), rng);
    let sa = s.apply(a)?;
    let sketched = if q.ncols() == 0 {
        sa.clone()
    } else {
        let sq = s.apply(&q)?;
        let qta = a.tr_mul_dense(&q)?.transpose();
        sa.sub(&sq.matmul(&qta)?)?
    };
    draw(distribution(sketched.col_norms_sq(), sa.frobenius_sq(), 1.0 / 3.0), c2, rng)
}

/// Row draws from the norms of `B̃ = B·Sᵀ = A·Sᵀ − A·R₁†(R₁·Sᵀ)`, with `S` a
/// sign sketch of [`jlt_rows`]`(m, 1)` rows applied on the right so that
/// row norms (the sampled quantity) are preserved.
pub fn adaptive_rows_sparse<R: Rng + ?Sized>(
    a: &dyn Matrix,
    v: &DenseMatrix,
    r1: &DenseMatrix,
    r2: usize,
    rng: &mut R,
) -> Result<AdaptiveDraw> {
    check_count(r2, 1.0)?;
    check_rows("adaptive_rows_sparse", a, v)?;
    check_cols("adaptive_rows_sparse", a, r1)?;
    let q = RowSpaceFactor::new(r1)?.basis().clone();
    let s = SignSketch::new(jlt_rows(a.nrows().max(2), 1.0), a.ncols(), rng);
    let ast = s.apply_right(a)?;
    let sketched = if q.ncols() == 0 {
        ast.clone()
    } else {
        let aq = a.mul_dense(&q)?;
        let sq = s.apply(&q)?;
        ast.sub(&aq.matmul_tr(&sq)?)?
    };
    draw(distribution(sketched.row_norms_sq(), ast.frobenius_sq(), 1.0 / 3.0), r2, rng)
}

/// Distribution on a grid of `1/(4n)` except at `i*`: `qᵢ ≥ pᵢ/4`, `q_{i*} ≥ ¼`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    /// `qᵢ = counts[i] / (4n)`.
    pub counts: Vec<usize>,
    pub i_star: usize,
}

impl DiscreteDistribution {
    /// Rounds `rᵢ = pᵢ/2` (`i ≠ i*`) up to the grid and gives `i*` the rest.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        let n = p.len();
        if n == 0 {
            return Err(invalid!("empty distribution"));
        }
        let i_star = (0..n).fold(0, |best, i| if p[i] > p[best] { i } else { best });
        let grid = 4 * n;
        let mut counts: Vec<usize> =
            p.iter().map(|&pi| math::ceil_usize(2.0 * n as f64 * pi.max(0.0))).collect();
        counts[i_star] = 0;
        let rest: usize = counts.iter().sum();
        if rest >= grid {
            return Err(Error::InvariantViolation("discretized mass exceeds one".into()));
        }
        counts[i_star] = grid - rest;
        Ok(DiscreteDistribution { counts, i_star })
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn q(&self) -> Vec<f64> {
        let g = (4 * self.n()) as f64;
        self.counts.iter().map(|&c| c as f64 / g).collect()
    }

    /// Smallest `i` with `h < Σ_{i' ≤ i} counts[i']`, for `h ∈ [0, 4n)`.
    pub fn inverse_cdf(&self, cumulative: &[usize], h: usize) -> usize {
        cumulative.partition_point(|&c| c <= h)
    }

    pub fn cumulative(&self) -> Vec<usize> {
        self.counts
            .iter()
            .scan(0usize, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect()
    }
}

/// `h_{a,b}(x) = ((a·x + b) mod p) mod range`, for all `(a, b) ∈ Z_p²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseHashFamily {
    pub prime: u64,
    pub range: u64,
}

impl PairwiseHashFamily {
    /// Family with the smallest prime `≥ max(range, domain)`.
    pub fn new(range: usize, domain: usize) -> Self {
        PairwiseHashFamily { prime: next_prime(range.max(domain).max(2) as u64), range: range as u64 }
    }

    pub fn size(&self) -> u64 {
        self.prime * self.prime
    }

    #[inline]
    pub fn hash(&self, a: u64, b: u64, x: u64) -> u64 {
        ((a * x + b) % self.prime) % self.range
    }

    /// `(a, b)` of the member with lexicographic index `idx`.
    pub fn member(&self, idx: u64) -> (u64, u64) {
        (idx / self.prime, idx % self.prime)
    }
}

pub fn next_prime(mut x: u64) -> u64 {
    let is_prime = |v: u64| v >= 2 && (2..).take_while(|d| d * d <= v).all(|d| v % d != 0);
    while !is_prime(x) {
        x += 1;
    }
    x
}

/// Outcome of a derandomized adaptive row selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerandomizedRows {
    /// `r₂` selected rows (repeats possible).
    pub indices: Vec<usize>,
    /// `‖A − VV†A R†R‖_F²` for the selection, computed directly.
    pub objective: f64,
    /// Lexicographic index of the winning hash function; `None` on zero residual.
    pub family_index: Option<u64>,
    pub family_size: u64,
    /// Distinct row sets whose objective was evaluated.
    pub distinct_candidates: usize,
    pub discrete: Option<DiscreteDistribution>,
}

/// Objective `‖A − Π_V A R†R‖_F²` split as
/// `‖(I − Π_V)A‖² + ‖H‖² − ‖H Q‖²` with `H = U_Vᵀ A` and `Q` an orthonormal
/// basis of the row space of `R`.
struct Objective<'a> {
    a: &'a DenseMatrix,
    h: DenseMatrix,
    base: f64,
    /// `Q₁ᵀ` (`ρ₁ x n`), rows contiguous.
    q1t: DenseMatrix,
    hq1_sq: f64,
}

impl<'a> Objective<'a> {
    fn new(a: &'a DenseMatrix, v: &DenseMatrix, r1: &DenseMatrix) -> Result<Self> {
        let uv = column_basis(v)?;
        let h = uv.tr_matmul(a)?;
        let base = a.sub(&uv.matmul(&h)?)?.frobenius_sq() + h.frobenius_sq();
        let q1 = RowSpaceFactor::new(r1)?.basis().clone();
        let hq1_sq = h.matmul(&q1)?.frobenius_sq();
        Ok(Objective { a, h, base, q1t: q1.transpose(), hq1_sq })
    }

    fn eval(&self, rows: &[usize]) -> f64 {
        let mut added: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
        let mut gain = 0.0;
        for &i in rows {
            let mut x = self.a.row(i).to_vec();
            let norm0: f64 = x.iter().map(|t| t * t).sum::<f64>();
            for _ in 0..2 {
                for q in (0..self.q1t.nrows()).map(|j| self.q1t.row(j)).chain(added.iter().map(|q| &q[..])) {
                    let d: f64 = x.iter().zip(q).map(|(p, r)| p * r).sum();
                    for (p, r) in x.iter_mut().zip(q) {
                        *p -= d * r;
                    }
                }
            }
            let norm: f64 = x.iter().map(|t| t * t).sum();
            if norm <= 1e-20 * norm0 || norm == 0.0 {
                continue;
            }
            let s = 1.0 / math::sqrt(norm);
            x.iter_mut().for_each(|t| *t *= s);
            for p in 0..self.h.nrows() {
                let d: f64 = self.h.row(p).iter().zip(&x).map(|(a, b)| a * b).sum();
                gain += d * d;
            }
            added.push(x);
        }
        self.base - self.hq1_sq - gain
    }
}

/// `‖A − VV†A R†R‖_F²` with `R = [R₁; A[rows, :]]`, computed directly.
pub fn rows_objective(a: &DenseMatrix, v: &DenseMatrix, r1: &DenseMatrix, rows: &[usize]) -> Result<f64> {
    let uv = column_basis(v)?;
    let p = uv.matmul(&uv.tr_matmul(a)?)?;
    let r = r1.vstack(&a.rows_at(rows))?;
    let rf = RowSpaceFactor::new(&r)?;
    let pr = p.matmul(&rf.pinv()?)?.matmul(&r)?;
    Ok(a.sub(&pr)?.frobenius_sq())
}

/// Derandomized adaptive row sampling.
///
/// Builds `p` from exact residual row norms of `A − AR₁†R₁`, discretizes it
/// to `q`, and enumerates every member `h` of a pairwise-independent hash
/// family: trial `ℓ ∈ [r₂]` selects the row found by mapping `h(ℓ)` through
/// the inverse CDF of `q`. The candidate minimizing
/// `‖A − VV†A R†R‖_F²` wins; ties go to the lowest family index.
pub fn adaptive_rows_d(a: &DenseMatrix, v: &DenseMatrix, r1: &DenseMatrix, r2: usize) -> Result<DerandomizedRows> {
    check_count(r2, 1.0)?;
    check_rows("adaptive_rows_d", a, v)?;
    check_cols("adaptive_rows_d", a, r1)?;
    let m = a.nrows();
    let q1 = RowSpaceFactor::new(r1)?.basis().clone();
    let norms = residual_row_norms(a, &q1)?;
    let dist = distribution(norms, a.frobenius_sq(), 1.0);
    if dist.uniform_fallback {
        let indices: Vec<usize> = (0..r2).map(|l| l % m).collect();
        let objective = rows_objective(a, v, r1, &indices)?;
        return Ok(DerandomizedRows {
            indices,
            objective,
            family_index: None,
            family_size: 0,
            distinct_candidates: 1,
            discrete: None,
        });
    }
    let disc = DiscreteDistribution::from_probabilities(&dist.p)?;
    let cumulative = disc.cumulative();
    let family = PairwiseHashFamily::new(4 * m, r2);
    let obj = Objective::new(a, v, r1)?;
    let mut memo: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut best: Option<(f64, u64)> = None;
    let mut trial = vec![0usize; r2];
    for idx in 0..family.size() {
        let (ha, hb) = family.member(idx);
        for (l, t) in trial.iter_mut().enumerate() {
            *t = disc.inverse_cdf(&cumulative, family.hash(ha, hb, l as u64) as usize);
        }
        let mut key = trial.clone();
        key.sort_unstable();
        key.dedup();
        let value = *memo.entry(key).or_insert_with_key(|k| obj.eval(k));
        if best.map_or(true, |(b, _)| value < b) {
            best = Some((value, idx));
        }
    }
    let (_, win) = best.expect("family is nonempty");
    let (ha, hb) = family.member(win);
    let indices: Vec<usize> =
        (0..r2).map(|l| disc.inverse_cdf(&cumulative, family.hash(ha, hb, l as u64) as usize)).collect();
    let objective = rows_objective(a, v, r1, &indices)?;
    Ok(DerandomizedRows {
        indices,
        objective,
        family_index: Some(win),
        family_size: family.size(),
        distinct_candidates: memo.len(),
        discrete: Some(disc),
    })
}

/// Derandomized adaptive column sampling:
/// `adaptive_rows_d(Aᵀ, A_kᵀ, Vᵀ, c₂)` with `V` the already chosen columns.
pub fn adaptive_cols_d(a: &DenseMatrix, v: &DenseMatrix, c2: usize, k: usize) -> Result<DerandomizedRows> {
    check_rows("adaptive_cols_d", a, v)?;
    if k == 0 {
        return Err(invalid!("rank k must be at least 1"));
    }
    let ak = svd(a)?.reconstruct(k);
    adaptive_rows_d(&a.transpose(), &ak.transpose(), &v.transpose(), c2)
}
