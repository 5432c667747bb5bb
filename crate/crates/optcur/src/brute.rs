//! Exhaustive column-subset search, an oracle for small instances.

use optcur_core::matrix::linalg::{svd, RangeFactor};
use optcur_core::{DenseMatrix, Error, Result};
use serde::{Deserialize, Serialize};

/// Largest number of subsets [`brute_force_best_columns`] will visit.
pub const SUBSET_BUDGET: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestColumns {
    pub subset: Vec<usize>,
    /// `min ‖A − Π^F_{C,k}(A)‖_F²` over all `c`-subsets.
    pub error: f64,
    pub visited: usize,
}

pub fn binomial(n: usize, c: usize) -> u128 {
    let c = c.min(n - c.min(n));
    (0..c).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `‖A − Π^F_{C,k}(A)‖_F²` for `C = A[:, cols]`, computed entrywise.
pub fn span_error(a: &DenseMatrix, cols: &[usize], k: usize) -> Result<f64> {
    let f = RangeFactor::new(&a.columns(cols))?;
    let q = f.q();
    if q.ncols() == 0 {
        return Ok(a.frobenius_sq());
    }
    let qa = q.tr_matmul(a)?;
    let approx = q.matmul(&svd(&qa)?.reconstruct(k))?;
    Ok(a.sub(&approx)?.frobenius_sq())
}

/// The best `c` columns for rank-`k` approximation, by exhaustive search.
/// Ties keep the lexicographically first subset.
pub fn brute_force_best_columns(a: &DenseMatrix, c: usize, k: usize) -> Result<BestColumns> {
    let n = a.ncols();
    if c == 0 || c > n || k == 0 {
        return Err(Error::InvalidArgument(format!("need 1 <= c <= n and k >= 1; got c = {c}, n = {n}, k = {k}")));
    }
    let count = binomial(n, c);
    if count > SUBSET_BUDGET {
        return Err(Error::InvalidArgument(format!("{count} subsets exceed the budget of {SUBSET_BUDGET}")));
    }
    let mut subset: Vec<usize> = (0..c).collect();
    let mut best = BestColumns { subset: subset.clone(), error: f64::INFINITY, visited: 0 };
    loop {
        let e = span_error(a, &subset, k)?;
        best.visited += 1;
        if e < best.error {
            best.error = e;
            best.subset.clone_from(&subset);
        }
        // Advance to the next combination in lexicographic order.
        let Some(i) = (0..c).rev().find(|&i| subset[i] < n - c + i) else { break };
        subset[i] += 1;
        for j in i + 1..c {
            subset[j] = subset[j - 1] + 1;
        }
    }
    Ok(best)
}
