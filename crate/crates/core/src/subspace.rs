//! Rank-`k` approximation restricted to a column span, exact and sketched,
//! and the rank-constrained intersection matrix.

use alloc::vec::Vec;

use rand::Rng;

use crate::adaptive::residual_col_norms;
use crate::error::{invalid, Error, Result};
use crate::math;
use crate::matrix::linalg::{svd, top_singular, truncate, IterOpts, RangeFactor};
use crate::matrix::{DenseMatrix, Matrix};
use crate::sketch::{make_sse, SSE_CONSTANT};

/// `V = YΨ` with `Y` orthonormal (`m x ρ`) and `Ψ` of full row rank
/// (`ρ x c`), plus `Δ` (`ρ x k`): the top-`k` left singular vectors of
/// (a possibly sketched) `YᵀA`. `YΔΔᵀYᵀA` is the approximation.
#[derive(Clone, Debug)]
pub struct SubspaceFactor {
    pub factor: RangeFactor,
    pub delta: DenseMatrix,
    /// Leading singular values of the matrix `Δ` was taken from.
    pub sigma_tilde: Vec<f64>,
}

impl SubspaceFactor {
    /// `Y` (`m x ρ`).
    pub fn y(&self) -> &DenseMatrix {
        self.factor.q()
    }

    /// `Ψ` (`ρ x c`).
    pub fn psi(&self) -> DenseMatrix {
        self.factor.coef()
    }

    pub fn k(&self) -> usize {
        self.delta.ncols()
    }

    /// `YΔ` (`m x k`, orthonormal columns).
    pub fn basis(&self) -> DenseMatrix {
        self.y().matmul(&self.delta).expect("shapes agree by construction")
    }

    /// `Ψ†Δ` (`c x k`), so that `V·Ψ†Δ = YΔ`.
    pub fn psi_pinv_delta(&self) -> Result<DenseMatrix> {
        self.factor.coef_pinv_mul(&self.delta)
    }

    /// `‖A − YΔΔᵀYᵀA‖_F²`, accumulated column block by column block.
    pub fn residual_sq(&self, a: &dyn Matrix) -> Result<f64> {
        Ok(residual_col_norms(a, &self.basis())?.iter().sum())
    }
}

fn check(a: &dyn Matrix, factor: &RangeFactor, k: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid!("rank k must be at least 1"));
    }
    if factor.q().nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            op: "subspace_svd",
            expected: (a.nrows(), factor.cols()),
            found: (factor.q().nrows(), factor.cols()),
        });
    }
    if factor.rank() < k {
        return Err(Error::Conditioning(alloc::format!(
            "span has rank {} < k = {k}",
            factor.rank()
        )));
    }
    Ok(())
}

fn leading_left(xi: &DenseMatrix, k: usize) -> Result<(DenseMatrix, Vec<f64>)> {
    let top = top_singular(xi, k, IterOpts::EXACT)?;
    if top.u.ncols() < k {
        return Err(Error::Conditioning("projected matrix has fewer than k columns".into()));
    }
    Ok((top.u, top.sigma))
}

/// Best rank-`k` approximation of `A` inside span(`V`), from a factor of `V`.
pub fn best_subspace_svd_factored(a: &dyn Matrix, factor: RangeFactor, k: usize) -> Result<SubspaceFactor> {
    check(a, &factor, k)?;
    let xi = a.tr_mul_dense(factor.q())?.transpose();
    let (delta, sigma_tilde) = leading_left(&xi, k)?;
    Ok(SubspaceFactor { factor, delta, sigma_tilde })
}

/// Best rank-`k` approximation of `A` inside span(`V`):
/// `YΔΔᵀYᵀA = Π^F_{V,k}(A)`.
pub fn best_subspace_svd(a: &dyn Matrix, v: &DenseMatrix, k: usize) -> Result<SubspaceFactor> {
    best_subspace_svd_factored(a, RangeFactor::new(v)?, k)
}

/// Embedding dimension `⌈40c²/ε²⌉` used by [`approx_subspace_svd`].
pub fn subspace_sketch_dim(c: usize, eps: f64) -> usize {
    math::ceil_usize(SSE_CONSTANT * (c * c) as f64 / (eps * eps))
}

/// Sketched variant: `Δ` from `Ξ = YᵀAWᵀ`, with `W` a sparse embedding of
/// the `n` columns into [`subspace_sketch_dim`] buckets.
pub fn approx_subspace_svd_factored<R: Rng + ?Sized>(
    a: &dyn Matrix,
    factor: RangeFactor,
    k: usize,
    eps: f64,
    rng: &mut R,
) -> Result<SubspaceFactor> {
    check(a, &factor, k)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid!("epsilon must lie in (0, 1], got {eps}"));
    }
    let w = make_sse(a.ncols(), subspace_sketch_dim(factor.cols(), eps), rng)?;
    let aty = a.tr_mul_dense(factor.q())?;
    let xi = w.apply_compact(&aty)?.mat.transpose();
    let (delta, sigma_tilde) = leading_left(&xi, k)?;
    Ok(SubspaceFactor { factor, delta, sigma_tilde })
}

pub fn approx_subspace_svd<R: Rng + ?Sized>(
    a: &dyn Matrix,
    v: &DenseMatrix,
    k: usize,
    eps: f64,
    rng: &mut R,
) -> Result<SubspaceFactor> {
    approx_subspace_svd_factored(a, RangeFactor::new(v)?, k, eps, rng)
}

/// `U = C†(U_C U_Cᵀ A V_R V_Rᵀ)_k R†`, the minimum-norm minimizer of
/// `‖A − CUR‖_F` over `rank(U) ≤ k`.
///
/// Computed as `W_C Σ_C⁻¹ (U_Cᵀ A V_R)_k Σ_R⁻¹ U_Rᵀ` from thin SVDs of `C`
/// and `R`.
pub fn rank_constrained_u(a: &dyn Matrix, c: &DenseMatrix, r: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    if k == 0 || k > c.ncols().min(r.nrows()) {
        return Err(invalid!("rank k = {k} must lie in [1, min(c, r)]"));
    }
    if c.nrows() != a.nrows() || r.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch {
            op: "rank_constrained_u",
            expected: (a.nrows(), a.ncols()),
            found: (c.nrows(), r.ncols()),
        });
    }
    let fc = svd(c)?;
    let fr = svd(r)?;
    if fc.rank() == 0 || fr.rank() == 0 {
        return Ok(DenseMatrix::zeros(c.ncols(), r.nrows()));
    }
    let inner = a.tr_mul_dense(&fc.u)?.transpose().matmul(&fr.v)?;
    let core = truncate(&svd(&inner)?, k)?;
    let inv_c: Vec<f64> = fc.sigma.iter().map(|s| 1.0 / s).collect();
    let inv_r: Vec<f64> = fr.sigma.iter().map(|s| 1.0 / s).collect();
    let middle = core.scale_rows(&inv_c).scale_cols(&inv_r);
    fc.v.matmul(&middle)?.matmul_tr(&fr.u)
}
