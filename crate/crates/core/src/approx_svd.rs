//! Rank-`k` right factors `Z` with `‖A − AZZᵀ‖_F² ≤ (1+ε)‖A − A_k‖_F²`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::matrix::linalg::{orthonormalize, rank_tolerance, svd_leading, top_singular, IterOpts};
use crate::matrix::{DenseMatrix, Matrix};
use crate::sketch::{make_sse, SignSketch, SSE_CONSTANT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvdMode {
    Deterministic,
    Randomized,
    Sparse,
}

/// `n x k` factor with orthonormal columns.
#[derive(Clone, Debug)]
pub struct FactorZ {
    pub z: DenseMatrix,
    pub mode: SvdMode,
    pub epsilon: f64,
}

fn check_args(a: &dyn Matrix, k: usize, eps: f64) -> Result<()> {
    if k == 0 {
        return Err(invalid!("rank k must be at least 1"));
    }
    if k > a.nrows().min(a.ncols()) {
        return Err(invalid!("rank k = {k} exceeds min dimension of a {}x{} matrix", a.nrows(), a.ncols()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid!("epsilon must lie in (0, 1], got {eps}"));
    }
    Ok(())
}

/// Exact truncated SVD: `Z = V_k`. Satisfies the contract with ε = 0.
///
/// Errors if `k` exceeds the numerical rank of `A`.
pub fn deterministic_svd(a: &dyn Matrix, k: usize, eps: f64) -> Result<FactorZ> {
    check_args(a, k, eps)?;
    let top = top_singular(a, k, IterOpts::EXACT)?;
    let tol = rank_tolerance(a.nrows(), a.ncols(), top.sigma[0]);
    if top.sigma[k - 1] <= tol {
        return Err(invalid!("rank k = {k} exceeds the numerical rank of the input"));
    }
    Ok(FactorZ { z: top.v, mode: SvdMode::Deterministic, epsilon: eps })
}

/// Sketch-and-project: `Q = orth(A·Sᵀ)` for a sign sketch of width
/// `k + ⌈k/ε⌉`, then `Z` = top-`k` right singular vectors of `QᵀA`.
pub fn randomized_svd<R: Rng + ?Sized>(a: &dyn Matrix, k: usize, eps: f64, rng: &mut R) -> Result<FactorZ> {
    check_args(a, k, eps)?;
    let p = (k + math::ceil_usize(k as f64 / eps)).min(a.nrows().min(a.ncols()));
    let s = SignSketch::new(p, a.ncols(), rng);
    let q = orthonormalize(&s.apply_right(a)?)?;
    let b = a.tr_mul_dense(&q)?.transpose();
    let f = svd_leading(&b, k)?;
    if f.v.ncols() != k {
        return Err(Error::NumericalFailure("projected matrix too small".into()));
    }
    Ok(FactorZ { z: f.v, mode: SvdMode::Randomized, epsilon: eps })
}

/// Embedding dimension used by [`sparse_svd`].
pub fn sparse_svd_dim(k: usize, eps: f64) -> usize {
    math::ceil_usize(SSE_CONSTANT * ((k * k + k) as f64) / (eps * eps))
}

/// `Z` = top-`k` right singular vectors of `W·A`, with `W` a sparse
/// embedding of dimension [`sparse_svd_dim`]. The sketch stays sparse and is
/// only touched through products with `n x O(k)` blocks.
pub fn sparse_svd<R: Rng + ?Sized>(a: &dyn Matrix, k: usize, eps: f64, rng: &mut R) -> Result<FactorZ> {
    check_args(a, k, eps)?;
    let w = make_sse(a.nrows(), sparse_svd_dim(k, eps), rng)?;
    let sketch = w.apply_sparse(a)?;
    let opts = IterOpts { dense_limit: 0, max_iter: 60, value_tol: 1e-12, residual_tol: 1e-8, ..IterOpts::EXACT };
    let mut top = top_singular(&sketch, k, opts)?;
    if top.v.ncols() < k {
        // The sketch has fewer rows than k; pad with an orthonormal completion.
        let extra = DenseMatrix::from_fn(a.ncols(), k, |i, j| if i == j { 1.0 } else { 0.0 });
        let basis = orthonormalize(&top.v.hstack(&extra)?)?;
        top.v = basis.col_range(0, k);
    }
    Ok(FactorZ { z: top.v, mode: SvdMode::Sparse, epsilon: eps })
}

/// `‖A − A·Z·Zᵀ‖_F²`.
pub fn projection_residual(a: &dyn Matrix, z: &DenseMatrix) -> Result<f64> {
    Ok(crate::adaptive::residual_row_norms(a, z)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::linalg::{orthonormality_defect, singular_values};
    use crate::matrix::SparseMatrix;
    use crate::rng_from_seed;

    fn random(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = rng_from_seed(seed);
        DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn opt(a: &DenseMatrix, k: usize) -> f64 {
        singular_values(a).unwrap()[k..].iter().map(|s| s * s).sum()
    }

    #[test]
    fn deterministic_diagonal_picks_largest() {
        let a = DenseMatrix::from_diag(&[1.0, 5.0, 2.0]);
        let z = deterministic_svd(&a, 1, 1.0).unwrap().z;
        assert!((z[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn deterministic_bound_and_rank_check() {
        let a = random(50, 40, 1);
        let z = deterministic_svd(&a, 3, 0.5).unwrap().z;
        let r = projection_residual(&a, &z).unwrap();
        assert!(r <= opt(&a, 3) * (1.0 + 1e-10));
        let low = random(20, 2, 2).matmul(&random(2, 15, 3)).unwrap();
        let z = deterministic_svd(&low, 2, 1.0).unwrap().z;
        assert!(projection_residual(&low, &z).unwrap() <= 1e-20 * low.frobenius_sq());
        assert!(deterministic_svd(&low, 3, 1.0).is_err());
    }

    #[test]
    fn randomized_exact_rank_every_seed() {
        let low = random(60, 4, 4).matmul(&random(4, 50, 5)).unwrap();
        for s in 0..20 {
            let f = randomized_svd(&low, 4, 0.5, &mut rng_from_seed(s)).unwrap();
            assert_eq!(f.z.ncols(), 4);
            assert!(orthonormality_defect(&f.z) < 1e-9);
            assert!(projection_residual(&low, &f.z).unwrap() <= 1e-18 * low.frobenius_sq());
        }
    }

    #[test]
    fn randomized_mean_within_bound() {
        let a = random(80, 60, 6);
        let (k, eps) = (4, 0.5);
        let o = opt(&a, k);
        let trials = 500;
        let vals: alloc::vec::Vec<f64> = (0..trials)
            .map(|s| {
                let f = randomized_svd(&a, k, eps, &mut rng_from_seed(10_000 + s)).unwrap();
                assert!(orthonormality_defect(&f.z) < 1e-9);
                let r = projection_residual(&a, &f.z).unwrap();
                assert!(r >= o - 1e-9);
                r
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / trials as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!(mean <= (1.0 + eps) * o + 3.0 * se, "mean {mean} opt {o}");
    }

    fn sparse_random(m: usize, n: usize, fill: f64, seed: u64) -> SparseMatrix {
        let mut rng = rng_from_seed(seed);
        let mut t = alloc::vec::Vec::new();
        for i in 0..m {
            for j in 0..n {
                if rng.random::<f64>() < fill {
                    t.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        SparseMatrix::from_triplets(m, n, &t).unwrap()
    }

    #[test]
    fn sparse_exact_rank() {
        let u = sparse_random(300, 3, 0.3, 7).to_dense();
        let v = sparse_random(3, 200, 0.3, 8).to_dense();
        let a = SparseMatrix::from_dense(&u.matmul(&v).unwrap());
        for s in 0..5 {
            let f = sparse_svd(&a, 3, 0.5, &mut rng_from_seed(s)).unwrap();
            assert_eq!(f.z.ncols(), 3);
            assert!(projection_residual(&a, &f.z).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn sparse_bound_monte_carlo() {
        let a = sparse_random(1000, 800, 0.01, 9);
        let o = crate::matrix::linalg::tail_energy(&a, 5).unwrap();
        let ok = (0..100)
            .filter(|&s| {
                let f = sparse_svd(&a, 5, 0.5, &mut rng_from_seed(700 + s)).unwrap();
                assert_eq!(f.z.ncols(), 5);
                projection_residual(&a, &f.z).unwrap() <= 1.5 * o
            })
            .count();
        assert!(ok >= 85, "{ok}");
    }
}
