//! Column/row selection: sampling with replacement and dual-set (BSS)
//! spectral-Frobenius sparsification.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::matrix::linalg::{orthonormality_defect, sym_eigen};
use crate::matrix::DenseMatrix;
use crate::sketch::{make_sse, SSE_CONSTANT};

/// Selection `Ω` (as indices, repeats allowed) and rescaling `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPair {
    /// Size of the index set sampled from.
    pub n: usize,
    /// `Ω`: the `j`-th column of `Ω` is `e_{indices[j]}`.
    pub indices: Vec<usize>,
    /// `D_jj = 1/√(p_{indices[j]}·r)`.
    pub scales: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub beta: f64,
}

impl SamplingPair {
    pub fn r(&self) -> usize {
        self.indices.len()
    }

    /// Dense `Ω` (`n x r`).
    pub fn omega(&self) -> DenseMatrix {
        let mut o = DenseMatrix::zeros(self.n, self.r());
        for (j, &i) in self.indices.iter().enumerate() {
            o[(i, j)] = 1.0;
        }
        o
    }

    /// `(ΩD)ᵀ X`: the sampled rows of `X`, rescaled.
    pub fn sample_rows(&self, x: &DenseMatrix) -> DenseMatrix {
        x.rows_at(&self.indices).scale_rows(&self.scales)
    }
}

/// `pᵢ = ‖xᵢ‖² / ‖X‖_F²` over the rows of `X`.
pub fn row_norm_probabilities(x: &DenseMatrix) -> Result<Vec<f64>> {
    let norms = x.row_norms_sq();
    let total: f64 = norms.iter().sum();
    if !(total > 0.0) {
        return Err(invalid!("sampling distribution undefined for an all-zero matrix"));
    }
    Ok(norms.iter().map(|v| v / total).collect())
}

fn check_sampling_shape(x: &DenseMatrix, r: usize, beta: f64) -> Result<()> {
    let (n, k) = x.shape();
    if k == 0 || n <= k {
        return Err(invalid!("sampling needs n > k >= 1, got {n}x{k}"));
    }
    if r == 0 || r > n {
        return Err(invalid!("sample count r = {r} must lie in [1, {n}]"));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid!("beta must lie in (0, 1], got {beta}"));
    }
    Ok(())
}

/// Random sampling with replacement from the row-norm distribution of `X`
/// (`n x k`). Every distribution satisfies the `β` floor when `β ≤ 1`.
pub fn rand_sampling<R: Rng + ?Sized>(x: &DenseMatrix, r: usize, beta: f64, rng: &mut R) -> Result<SamplingPair> {
    check_sampling_shape(x, r, beta)?;
    let p = row_norm_probabilities(x)?;
    draw(x.nrows(), p, r, beta, rng)
}

/// Random sampling with a caller-supplied distribution satisfying
/// `pᵢ ≥ β‖xᵢ‖²/‖X‖_F²`.
pub fn rand_sampling_with<R: Rng + ?Sized>(
    x: &DenseMatrix,
    probabilities: Vec<f64>,
    r: usize,
    beta: f64,
    rng: &mut R,
) -> Result<SamplingPair> {
    check_sampling_shape(x, r, beta)?;
    if probabilities.len() != x.nrows() {
        return Err(invalid!("need one probability per row"));
    }
    let sum: f64 = probabilities.iter().sum();
    if probabilities.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(invalid!("probabilities must be nonnegative and sum to 1"));
    }
    let exact = row_norm_probabilities(x)?;
    if let Some(i) = (0..exact.len()).find(|&i| probabilities[i] < beta * exact[i] * (1.0 - 1e-12)) {
        return Err(invalid!("probability of row {i} violates the beta floor"));
    }
    draw(x.nrows(), probabilities, r, beta, rng)
}

fn draw<R: Rng + ?Sized>(n: usize, p: Vec<f64>, r: usize, beta: f64, rng: &mut R) -> Result<SamplingPair> {
    let dist = WeightedIndex::new(&p).map_err(|e| invalid!("bad sampling distribution: {e}"))?;
    let indices: Vec<usize> = (0..r).map(|_| dist.sample(rng)).collect();
    let scales = indices.iter().map(|&i| 1.0 / math::sqrt(p[i] * r as f64)).collect();
    Ok(SamplingPair { n, indices, scales, probabilities: p, beta })
}

/// Sparse nonnegative weights over `n` indices, recorded as `r` picks.
///
/// Pick `j` contributes column `√w_j · e_{index_j}` to the `n x r` matrix
/// `S`, so `S Sᵀ = diag(s)` with `sᵢ` the summed weight of index `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSelection {
    pub n: usize,
    pub picks: Vec<(usize, f64)>,
}

impl WeightedSelection {
    pub fn r(&self) -> usize {
        self.picks.len()
    }

    /// The weight vector `s`.
    pub fn weights(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for &(i, w) in &self.picks {
            s[i] += w;
        }
        s
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights().iter().filter(|&&w| w > 0.0).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.picks.iter().map(|p| p.0).collect()
    }

    /// `√w_j` per pick.
    pub fn scales(&self) -> Vec<f64> {
        self.picks.iter().map(|p| math::sqrt(p.1)).collect()
    }

    /// Dense `S` (`n x r`).
    pub fn s_matrix(&self) -> DenseMatrix {
        let mut s = DenseMatrix::zeros(self.n, self.r());
        for (j, &(i, w)) in self.picks.iter().enumerate() {
            s[(i, j)] = math::sqrt(w);
        }
        s
    }

    /// `Sᵀ X`: the picked rows of `X`, scaled by `√w`.
    pub fn sample_rows(&self, x: &DenseMatrix) -> DenseMatrix {
        x.rows_at(&self.indices()).scale_rows(&self.scales())
    }
}

/// Dual-set spectral-Frobenius sparsification.
///
/// Given `V` (`n x k`, `VᵀV = I`) and `A` (`n x ℓ`), returns weights with at
/// most `r` nonzeros such that `σ_k(VᵀS) ≥ 1 − √(k/r)` and
/// `‖AᵀS‖_F² ≤ ‖A‖_F²`.
pub fn bss_sampling(v: &DenseMatrix, a: &DenseMatrix, r: usize) -> Result<WeightedSelection> {
    if a.nrows() != v.nrows() {
        return Err(Error::DimensionMismatch { op: "bss_sampling", expected: (v.nrows(), a.ncols()), found: a.shape() });
    }
    bss_from_norms(v, &a.row_norms_sq(), r)
}

/// [`bss_sampling`] given only the squared norms of the rows of `A`; the
/// Frobenius side of the barrier needs nothing else.
pub fn bss_from_norms(v: &DenseMatrix, a_norms_sq: &[f64], r: usize) -> Result<WeightedSelection> {
    let (n, k) = v.shape();
    if a_norms_sq.len() != n {
        return Err(invalid!("need one norm per row of V"));
    }
    if k == 0 || r <= k || r > n {
        return Err(invalid!("bss_sampling needs k < r <= n, got k = {k}, r = {r}, n = {n}"));
    }
    let defect = orthonormality_defect(v);
    if defect > 1e-8 {
        return Err(invalid!("V must have orthonormal columns (defect {defect:.2e})"));
    }
    let (kf, rf) = (k as f64, r as f64);
    let total: f64 = a_norms_sq.iter().sum();
    let delta_u = total / (1.0 - math::sqrt(kf / rf));
    let upper: Vec<f64> = a_norms_sq.iter().map(|&x| if delta_u > 0.0 { x / delta_u } else { 0.0 }).collect();

    let mut m = DenseMatrix::zeros(k, k);
    let mut picks = Vec::with_capacity(r);
    for tau in 0..r {
        let lo = tau as f64 - math::sqrt(rf * kf);
        let lo1 = lo + 1.0;
        let (lambda, e) = sym_eigen(&m)?;
        if let Some(l) = lambda.iter().find(|&&l| l - lo1 <= 0.0) {
            return Err(Error::InvariantViolation(format!("eigenvalue {l} below the lower barrier at step {tau}")));
        }
        let phi = |l: f64| lambda.iter().map(|x| 1.0 / (x - l)).sum::<f64>();
        let dphi = phi(lo1) - phi(lo);
        let w = v.matmul(&e)?;
        let lower: Vec<f64> = (0..n)
            .map(|i| {
                let (mut quad2, mut quad1) = (0.0, 0.0);
                for (j, &l) in lambda.iter().enumerate() {
                    let x = w[(i, j)] * w[(i, j)];
                    let g = l - lo1;
                    quad2 += x / (g * g);
                    quad1 += x / g;
                }
                quad2 / dphi - quad1
            })
            .collect();
        let chosen = (0..n).find(|&i| lower[i] > 0.0 && upper[i] <= lower[i]).or_else(|| {
            // Accept a roundoff-level miss on the best candidate.
            (0..n)
                .filter(|&i| lower[i] > 0.0)
                .max_by(|&x, &y| (lower[x] - upper[x]).total_cmp(&(lower[y] - upper[y])).then(y.cmp(&x)))
                .filter(|&i| upper[i] - lower[i] <= 1e-12 * upper[i].max(lower[i]))
        });
        let i = chosen.ok_or_else(|| Error::InvariantViolation(format!("no admissible index at barrier step {tau}")))?;
        let t = 2.0 / (upper[i] + lower[i]);
        let vi = v.row(i);
        for p in 0..k {
            for q in 0..k {
                m[(p, q)] += t * vi[p] * vi[q];
            }
        }
        picks.push((i, t));
    }
    let gamma = (1.0 - math::sqrt(kf / rf)) / rf;
    for p in &mut picks {
        p.1 *= gamma;
    }
    Ok(WeightedSelection { n, picks })
}

/// Embedding dimension used by [`bss_sampling_sparse`] for `n` vectors.
pub fn bss_sparse_dim(n: usize, eps: f64) -> usize {
    math::ceil_usize(SSE_CONSTANT * (n * n) as f64 / (eps * eps))
}

/// [`bss_sampling`] run on `A·Wᵀ`, with `W` a sparse embedding of the
/// `ℓ`-dimension of dimension [`bss_sparse_dim`]. The spectral guarantee is
/// unchanged; the Frobenius one degrades to `(1+ε)/(1−ε)` with high
/// probability.
pub fn bss_sampling_sparse<R: Rng + ?Sized>(
    v: &DenseMatrix,
    a: &DenseMatrix,
    r: usize,
    eps: f64,
    rng: &mut R,
) -> Result<WeightedSelection> {
    if a.nrows() != v.nrows() {
        return Err(Error::DimensionMismatch { op: "bss_sampling_sparse", expected: (v.nrows(), a.ncols()), found: a.shape() });
    }
    bss_sparse_columns(v, &a.transpose(), r, eps, rng)
}

/// [`bss_sampling_sparse`] given `Aᵀ` (`ℓ x n`): vector `i` is column `i`.
pub fn bss_sparse_columns<R: Rng + ?Sized>(
    v: &DenseMatrix,
    a_t: &DenseMatrix,
    r: usize,
    eps: f64,
    rng: &mut R,
) -> Result<WeightedSelection> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid!("epsilon must lie in (0, 1), got {eps}"));
    }
    let w = make_sse(a_t.nrows(), bss_sparse_dim(v.nrows(), eps), rng)?;
    let sketched = w.apply_compact(a_t)?.mat;
    bss_from_norms(v, &sketched.col_norms_sq(), r)
}
