//! Exact dense factorizations and the helpers built on them.
//!
//! Numerical rank follows the convention `σᵢ > max(m, n) · σ₁ · 2⁻⁴⁵`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{MatRef, Par, Side};
use rand::{Rng, SeedableRng};

use crate::error::{invalid, Error, Result};
use crate::math;

use super::{mul_views, DenseMatrix, Matrix};

/// Relative factor in the numerical-rank threshold.
pub const RANK_EPS: f64 = 2.842_170_943_040_401e-14; // 2^-45

/// Threshold below which a singular value counts as zero.
pub fn rank_tolerance(m: usize, n: usize, sigma1: f64) -> f64 {
    m.max(n) as f64 * sigma1 * RANK_EPS
}

/// Thin SVD truncated to numerical rank: `A = U diag(σ) Vᵀ`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `U diag(σ) Vᵀ` using the first `k` triplets.
    pub fn reconstruct(&self, k: usize) -> DenseMatrix {
        let k = k.min(self.rank());
        let us = self.u.col_range(0, k).scale_cols(&self.sigma[..k]);
        us.matmul_tr(&self.v.col_range(0, k)).expect("shapes agree by construction")
    }
}

fn faer_svd(a: MatRef<'_, f64>) -> Result<faer::linalg::solvers::Svd<f64>> {
    a.thin_svd().map_err(|e| Error::NumericalFailure(format!("svd did not converge: {e:?}")))
}

/// Flips signs so the largest-magnitude entry of each column of `u` is positive.
fn normalize_signs(u: &mut DenseMatrix, v: &mut DenseMatrix) {
    for j in 0..u.ncols() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for i in 0..u.nrows() {
            let x = u[(i, j)];
            if x.abs() > best {
                best = x.abs();
                sign = if x < 0.0 { -1.0 } else { 1.0 };
            }
        }
        if sign < 0.0 {
            for i in 0..u.nrows() {
                u[(i, j)] = -u[(i, j)];
            }
            for i in 0..v.nrows() {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
}

fn svd_keep(a: &DenseMatrix, keep: impl Fn(&[f64]) -> usize) -> Result<Svd> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(Svd { u: DenseMatrix::zeros(m, 0), sigma: Vec::new(), v: DenseMatrix::zeros(n, 0) });
    }
    let f = faer_svd(a.as_faer())?;
    let s = f.S().column_vector();
    let all: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
    let r = keep(&all);
    let mut u = DenseMatrix::from_faer(f.U().get(.., 0..r));
    let mut v = DenseMatrix::from_faer(f.V().get(.., 0..r));
    normalize_signs(&mut u, &mut v);
    Ok(Svd { u, sigma: all[..r].to_vec(), v })
}

/// Thin SVD truncated to numerical rank, with deterministic signs.
pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    svd_keep(a, |s| {
        let tol = rank_tolerance(m, n, s.first().copied().unwrap_or(0.0));
        s.iter().take_while(|&&x| x > tol).count()
    })
}

/// Leading `k` singular triplets of a dense matrix regardless of rank
/// (columns past the rank are still orthonormal).
pub fn svd_leading(a: &DenseMatrix, k: usize) -> Result<Svd> {
    svd_keep(a, |s| k.min(s.len()))
}

/// All `min(m, n)` singular values, descending.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.as_faer()
        .singular_values()
        .map_err(|e| Error::NumericalFailure(format!("singular values did not converge: {e:?}")))
}

pub fn numerical_rank(a: &DenseMatrix) -> Result<usize> {
    let s = singular_values(a)?;
    let tol = rank_tolerance(a.nrows(), a.ncols(), s.first().copied().unwrap_or(0.0));
    Ok(s.iter().filter(|&&x| x > tol).count())
}

/// Best rank-`k` approximation `A_k` from a factorization.
pub fn truncate(f: &Svd, k: usize) -> Result<DenseMatrix> {
    if k == 0 {
        return Err(invalid!("truncation rank must be at least 1"));
    }
    Ok(f.reconstruct(k))
}

/// `A_k` computed directly.
pub fn best_rank_k(a: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    truncate(&svd(a)?, k)
}

/// Moore–Penrose pseudo-inverse via the rank-truncated SVD.
pub fn pinv(a: &DenseMatrix) -> Result<DenseMatrix> {
    let f = svd(a)?;
    let inv: Vec<f64> = f.sigma.iter().map(|s| 1.0 / s).collect();
    f.v.scale_cols(&inv).matmul_tr(&f.u)
}

/// Thin QR with nonnegative diagonal in `r`.
#[derive(Clone, Debug)]
pub struct Qr {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

pub fn qr(a: &DenseMatrix) -> Result<Qr> {
    let (m, c) = a.shape();
    if m < c {
        return Err(invalid!("qr needs rows >= cols, got {m}x{c}"));
    }
    if c == 0 {
        return Ok(Qr { q: DenseMatrix::zeros(m, 0), r: DenseMatrix::zeros(0, 0) });
    }
    let f = a.as_faer().qr();
    let mut q = DenseMatrix::from_faer(f.compute_thin_Q().as_ref());
    let mut r = DenseMatrix::from_faer(f.thin_R());
    for i in 0..c {
        if r[(i, i)] < 0.0 {
            for j in i..c {
                r[(i, j)] = -r[(i, j)];
            }
            for row in 0..m {
                q[(row, i)] = -q[(row, i)];
            }
        }
    }
    Ok(Qr { q, r })
}

/// Orthonormal basis of the column space (thin Householder Q, no rank check).
pub fn orthonormalize(a: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(qr(a)?.q)
}

pub fn frobenius_sq(a: &dyn Matrix) -> f64 {
    a.frobenius_sq()
}

pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), DenseMatrix::zeros(0, 0)));
    }
    let e = a
        .as_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("symmetric eigensolver: {e:?}")))?;
    let s = e.S().column_vector();
    Ok(((0..n).map(|i| s[i]).collect(), DenseMatrix::from_faer(e.U())))
}

/// Settings for [`top_singular`].
#[derive(Clone, Copy, Debug)]
pub struct IterOpts {
    /// Matrices with at most this many entries use a dense SVD instead.
    pub dense_limit: usize,
    pub oversample: usize,
    pub max_iter: usize,
    /// Relative change in the leading values that counts as converged.
    pub value_tol: f64,
    /// Ritz residual `‖A vᵢ − σᵢ uᵢ‖ / σ₁` that counts as converged.
    pub residual_tol: f64,
    pub seed: u64,
}

impl IterOpts {
    /// Iterates to working precision.
    pub const EXACT: IterOpts = IterOpts {
        dense_limit: 400 * 400,
        oversample: 10,
        max_iter: 600,
        value_tol: 1e-15,
        residual_tol: 1e-10,
        seed: 0x6a09_e667_f3bc_c908,
    };

    /// A fixed, small number of subspace iterations.
    pub const fn sketchy(iters: usize) -> IterOpts {
        IterOpts { dense_limit: 0, oversample: 10, max_iter: iters, value_tol: 0.0, residual_tol: 0.0, ..Self::EXACT }
    }
}

/// Leading singular triplets.
#[derive(Clone, Debug)]
pub struct TopSvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
    pub iterations: usize,
    pub converged: bool,
}

/// Leading `k` singular triplets of any [`Matrix`].
///
/// Small inputs go through a dense SVD. Larger ones use block subspace
/// iteration with Rayleigh–Ritz extraction, touching `A` only through
/// products with dense blocks.
pub fn top_singular(a: &dyn Matrix, k: usize, opts: IterOpts) -> Result<TopSvd> {
    let (m, n) = (a.nrows(), a.ncols());
    let k = k.min(m.min(n));
    let b = (k + opts.oversample).min(m.min(n));
    if m * n <= opts.dense_limit || b >= m.min(n) {
        let f = svd_leading(&a.to_dense(), k)?;
        return Ok(TopSvd { u: f.u, sigma: f.sigma, v: f.v, iterations: 0, converged: true });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = DenseMatrix::from_fn(n, b, |_, _| rng.random_range(-1.0..1.0));
    let mut prev = vec![f64::INFINITY; k];
    let mut last = None;
    for it in 1..=opts.max_iter.max(1) {
        let y = orthonormalize(&a.mul_dense(&x)?)?;
        let z = a.tr_mul_dense(&y)?;
        // z = Aᵀ y = Vz Σ Uzᵀ, so yᵀ A = Uz Σ Vzᵀ.
        let f = faer_svd(z.as_faer())?;
        let s = f.S().column_vector();
        let sigma: Vec<f64> = (0..k).map(|i| s[i]).collect();
        let vz = DenseMatrix::from_faer(f.U());
        let uz = DenseMatrix::from_faer(f.V().get(.., 0..k));
        let u = y.matmul(&uz)?;
        let v = vz.col_range(0, k);
        let s1 = sigma.first().copied().unwrap_or(0.0);
        let settled = s1 == 0.0
            || sigma.iter().zip(&prev).all(|(a, b)| (a - b).abs() <= opts.value_tol * s1);
        let mut converged = false;
        if settled && opts.residual_tol > 0.0 {
            let av = a.mul_dense(&v)?;
            converged = (0..k).all(|j| {
                let r: f64 = (0..m).map(|i| { let d = av[(i, j)] - sigma[j] * u[(i, j)]; d * d }).sum();
                math::sqrt(r) <= opts.residual_tol * s1.max(f64::MIN_POSITIVE)
            });
        }
        prev.clone_from(&sigma);
        x = vz;
        last = Some(TopSvd { u, sigma, v, iterations: it, converged });
        if converged || s1 == 0.0 {
            break;
        }
    }
    let mut out = last.expect("at least one iteration runs");
    normalize_signs(&mut out.u, &mut out.v);
    Ok(out)
}

/// `‖A − A_k‖_F²` from the leading singular values.
pub fn tail_energy(a: &dyn Matrix, k: usize) -> Result<f64> {
    let total = a.frobenius_sq();
    let top = top_singular(a, k, IterOpts::EXACT)?;
    let head: f64 = top.sigma.iter().map(|s| s * s).sum();
    Ok((total - head).max(0.0))
}

/// Orthonormal range basis of a column set plus the coefficient map back:
/// `X = Q · Ψ` with `Q` having orthonormal columns (`m x ρ`) and `Ψ` of
/// full row rank (`ρ x c`).
///
/// Logical columns may repeat (sampling with replacement); repeats share a
/// stored column. Full-rank inputs take a plain Householder QR path;
/// rank-deficient ones fall back to column-pivoted QR truncated at the
/// numerical rank.
#[derive(Clone, Debug)]
pub struct RangeFactor {
    q: DenseMatrix,
    cols: usize,
    coef: Coef,
}

#[derive(Clone, Debug)]
enum Coef {
    /// `Ψ = T E`, where `E` maps each logical column to its stored copy.
    Unique { t: DenseMatrix, slot: Vec<usize>, counts: Vec<usize> },
    /// `Ψᵀ = Q₂ S₂`.
    General { psi: DenseMatrix, q2: DenseMatrix, s2: DenseMatrix },
}

/// Splits an index list into first-occurrence distinct values and a slot map.
pub fn dedup_indices(idx: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut seen = alloc::collections::BTreeMap::new();
    let mut distinct = Vec::new();
    let slot = idx
        .iter()
        .map(|&i| {
            *seen.entry(i).or_insert_with(|| {
                distinct.push(i);
                distinct.len() - 1
            })
        })
        .collect();
    (distinct, slot)
}

fn solve_upper(t: &DenseMatrix, rhs: &DenseMatrix) -> DenseMatrix {
    let mut x = rhs.to_faer();
    solve_upper_triangular_in_place(t.as_faer(), x.as_mut(), Par::Seq);
    DenseMatrix::from_faer(x.as_ref())
}

fn solve_lower_tr(s: &DenseMatrix, rhs: &DenseMatrix) -> DenseMatrix {
    // Solves sᵀ x = rhs with s upper triangular.
    let mut x = rhs.to_faer();
    solve_lower_triangular_in_place(s.as_faer().transpose(), x.as_mut(), Par::Seq);
    DenseMatrix::from_faer(x.as_ref())
}

impl RangeFactor {
    /// Factor of a matrix whose columns are all distinct.
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let slot = (0..a.ncols()).collect();
        Self::from_distinct(a, slot)
    }

    /// `distinct` holds the stored columns; logical column `l` is `distinct[:, slot[l]]`.
    pub fn from_distinct(distinct: &DenseMatrix, slot: Vec<usize>) -> Result<Self> {
        let (m, u) = distinct.shape();
        if slot.iter().any(|&s| s >= u) {
            return Err(invalid!("slot index out of range"));
        }
        let cols = slot.len();
        if u == 0 || distinct.max_abs() == 0.0 {
            return Ok(RangeFactor {
                q: DenseMatrix::zeros(m, 0),
                cols,
                coef: Coef::General {
                    psi: DenseMatrix::zeros(0, cols),
                    q2: DenseMatrix::zeros(cols, 0),
                    s2: DenseMatrix::zeros(0, 0),
                },
            });
        }
        if m >= u {
            let f = qr(distinct)?;
            let diag: Vec<f64> = (0..u).map(|i| f.r[(i, i)].abs()).collect();
            let hi = diag.iter().cloned().fold(0.0, f64::max);
            let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
            if lo > rank_tolerance(m, u, hi) * 16.0 {
                let mut counts = vec![0usize; u];
                for &s in &slot {
                    counts[s] += 1;
                }
                return Ok(RangeFactor { q: f.q, cols, coef: Coef::Unique { t: f.r, slot, counts } });
            }
        }
        Self::pivoted(distinct, &slot)
    }

    fn pivoted(distinct: &DenseMatrix, slot: &[usize]) -> Result<Self> {
        let (m, u) = distinct.shape();
        let f = distinct.as_faer().col_piv_qr();
        let r = f.R();
        let d = m.min(u);
        let r00 = r[(0, 0)].abs();
        let tol = rank_tolerance(m, u, r00);
        let rho = (0..d).take_while(|&i| r[(i, i)].abs() > tol).count();
        let q_full = f.compute_thin_Q();
        let q = DenseMatrix::from_faer(q_full.as_ref().get(.., 0..rho));
        let (fwd, _) = f.P().arrays();
        // distinct · P = Q R, so stored column fwd[j] has coefficients R[:, j].
        let mut psi_u = DenseMatrix::zeros(rho, u);
        for j in 0..u {
            for i in 0..rho.min(j + 1) {
                psi_u[(i, fwd[j])] = r[(i, j)];
            }
        }
        let psi = psi_u.columns(slot);
        let g = qr(&psi.transpose())?;
        Ok(RangeFactor { q, cols: slot.len(), coef: Coef::General { psi, q2: g.q, s2: g.r } })
    }

    /// Orthonormal basis `Q` (`m x ρ`).
    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    /// Logical column count `c`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// True when the factored matrix had full column rank with no repeats.
    pub fn is_invertible(&self) -> bool {
        matches!(&self.coef, Coef::Unique { t, .. } if t.nrows() == self.cols)
    }

    /// The coefficient matrix `Ψ` (`ρ x c`).
    pub fn coef(&self) -> DenseMatrix {
        match &self.coef {
            Coef::Unique { t, slot, .. } => t.columns(slot),
            Coef::General { psi, .. } => psi.clone(),
        }
    }

    /// `Ψ† · M` for `M` of shape `ρ x p`.
    pub fn coef_pinv_mul(&self, mm: &DenseMatrix) -> Result<DenseMatrix> {
        if mm.nrows() != self.rank() {
            return Err(Error::DimensionMismatch {
                op: "coef_pinv_mul",
                expected: (self.rank(), mm.ncols()),
                found: mm.shape(),
            });
        }
        match &self.coef {
            Coef::Unique { t, slot, counts } => {
                let x = solve_upper(t, mm);
                let mut out = x.rows_at(slot);
                for (l, &s) in slot.iter().enumerate() {
                    let w = 1.0 / counts[s] as f64;
                    for v in out.row_mut(l) {
                        *v *= w;
                    }
                }
                Ok(out)
            }
            Coef::General { q2, s2, .. } => {
                if s2.nrows() == 0 {
                    return Ok(DenseMatrix::zeros(self.cols, mm.ncols()));
                }
                q2.matmul(&solve_lower_tr(s2, mm))
            }
        }
    }

    /// `X† · B` for `B` with `m` rows.
    pub fn pinv_mul(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        self.coef_pinv_mul(&self.q.tr_matmul(b)?)
    }

    /// Pseudo-inverse `X†` (`c x m`).
    pub fn pinv(&self) -> Result<DenseMatrix> {
        self.coef_pinv_mul(&self.q.transpose())
    }
}

/// `G · R†` where `R`'s rows are the given rows of `a` (repeats allowed).
pub struct RowSpaceFactor {
    inner: RangeFactor,
}

impl RowSpaceFactor {
    /// Factors `R = a[rows, :]`.
    pub fn from_rows(a: &dyn Matrix, rows: &[usize]) -> Result<Self> {
        let (distinct, slot) = dedup_indices(rows);
        let rt = a.select_rows(&distinct).transpose();
        Ok(RowSpaceFactor { inner: RangeFactor::from_distinct(&rt, slot)? })
    }

    /// Factors an explicit `R`.
    pub fn new(r: &DenseMatrix) -> Result<Self> {
        Ok(RowSpaceFactor { inner: RangeFactor::new(&r.transpose())? })
    }

    /// Orthonormal basis of the row space (`n x ρ`).
    pub fn basis(&self) -> &DenseMatrix {
        self.inner.q()
    }

    pub fn rank(&self) -> usize {
        self.inner.rank()
    }

    /// `G R†` for `G` with `n` columns.
    pub fn mul_pinv(&self, g: &DenseMatrix) -> Result<DenseMatrix> {
        let gq = g.matmul(self.inner.q())?;
        Ok(self.inner.coef_pinv_mul(&gq.transpose())?.transpose())
    }

    /// `R†` (`n x r`).
    pub fn pinv(&self) -> Result<DenseMatrix> {
        Ok(self.inner.pinv()?.transpose())
    }
}

/// `Aᵀ B` without forming the transpose, for dense operands.
pub fn gram(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    mul_views(a.as_faer().transpose(), b.as_faer())
}

/// Distance of `QᵀQ` from the identity (max-abs).
pub fn orthonormality_defect(q: &DenseMatrix) -> f64 {
    let g = gram(q, q);
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Projects `b` onto the orthogonal complement of range(`q`) (orthonormal `q`).
pub fn project_out(q: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if q.ncols() == 0 {
        return Ok(b.clone());
    }
    b.sub(&q.matmul(&q.tr_matmul(b)?)?)
}
