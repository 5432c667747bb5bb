//! Hard instances for column subset selection.
//!
//! `D` is `(n+1) x n` with columns `e₁ + (α/√k)e_{i+1}`. `B` holds `k`
//! diagonal copies of `D`, and `A = diag(B, Bᵀ)` is `t x t` with
//! `t = (2n+1)k`. Any rank-`k` approximation from few columns must pay for
//! the `Bᵀ` half.

use optcur_core::{Error, Result, SparseMatrix};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialInstance {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    /// Side length `(2n+1)k`.
    pub t: usize,
    pub a: SparseMatrix,
    /// `ℓ = nk`.
    pub ell: usize,
    /// Closed-form squared singular values, descending (zeros included).
    pub sigma_sq: Vec<f64>,
    /// `‖A − A_k‖_F²` summed from [`Self::sigma_sq`]: `nk + (2n−1)α²`.
    pub opt2: f64,
    /// The estimate `ℓ(1 + 2α²/k)`; agrees with `opt2` up to `α²`.
    pub opt2_estimate: f64,
}

pub fn gen_adversarial(n: usize, k: usize, alpha: f64) -> Result<AdversarialInstance> {
    if n < 2 || k == 0 || !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("need n > 1, k >= 1, alpha > 0; got n = {n}, k = {k}, alpha = {alpha}")));
    }
    let t = (2 * n + 1) * k;
    let (br, bc) = (k * (n + 1), k * n);
    let off = alpha / (k as f64).sqrt();
    let mut trip = Vec::with_capacity(4 * n * k);
    for b in 0..k {
        for i in 0..n {
            let col = b * n + i;
            for (row, v) in [(b * (n + 1), 1.0), (b * (n + 1) + i + 1, off)] {
                trip.push((row, col, v));
                trip.push((br + col, bc + row, v));
            }
        }
    }
    let a = SparseMatrix::from_triplets(t, t, &trip)?;
    let a2k = alpha * alpha / k as f64;
    let mut sigma_sq = vec![n as f64 + a2k; 2 * k];
    sigma_sq.extend(std::iter::repeat(a2k).take(2 * k * (n - 1)));
    sigma_sq.extend(std::iter::repeat(0.0).take(k));
    let opt2 = sigma_sq[k..].iter().sum();
    let ell = n * k;
    Ok(AdversarialInstance {
        n,
        k,
        alpha,
        t,
        a,
        ell,
        sigma_sq,
        opt2,
        opt2_estimate: ell as f64 * (1.0 + 2.0 * alpha * alpha / k as f64),
    })
}
