use serde::{Deserialize, Serialize};

use super::CurDecomposition;
use crate::adaptive::ZERO_RESIDUAL_RATIO_SQ;
use crate::error::{Error, Result};
use crate::matrix::linalg::{numerical_rank, qr, tail_energy};
use crate::matrix::{DenseMatrix, Matrix};

/// Exact error figures for a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `‖A − CUR‖_F²`.
    pub err2: f64,
    /// `‖A − A_k‖_F²`.
    pub opt2: f64,
    /// `err2 / opt2`; `None` when `opt2` is zero.
    pub ratio: Option<f64>,
    /// `‖A − CUR‖_F / ‖A‖_F`.
    pub relative_error: f64,
    pub c: usize,
    pub r: usize,
    pub rank_u: usize,
    pub k: usize,
    /// `A` has rank at most `k` (to working precision), so `opt2` is zero.
    pub exact: bool,
}

const BLOCK: usize = 256;

/// `‖A − L·M‖_F²`, one block of rows at a time.
fn residual_of_product(a: &dyn Matrix, l: &DenseMatrix, m: &DenseMatrix) -> Result<f64> {
    if l.nrows() != a.nrows() || m.ncols() != a.ncols() || l.ncols() != m.nrows() {
        return Err(Error::DimensionMismatch {
            op: "evaluate",
            expected: a_shape(a),
            found: (l.nrows(), m.ncols()),
        });
    }
    let mut total = 0.0;
    let mut start = 0;
    while start < a.nrows() {
        let end = (start + BLOCK).min(a.nrows());
        let idx: alloc::vec::Vec<usize> = (start..end).collect();
        let block = a.select_rows(&idx);
        let approx = l.rows_at(&idx).matmul(m)?;
        total += block.sub(&approx)?.frobenius_sq();
        start = end;
    }
    Ok(total)
}

fn a_shape(a: &dyn Matrix) -> (usize, usize) {
    (a.nrows(), a.ncols())
}

fn report(a: &dyn Matrix, err2: f64, opt2: f64, c: usize, r: usize, rank_u: usize, k: usize) -> EvalReport {
    let total = a.frobenius_sq();
    let exact = opt2 <= ZERO_RESIDUAL_RATIO_SQ * total;
    let ratio = if exact { None } else { Some(err2 / opt2) };
    let relative_error = if total > 0.0 { crate::math::sqrt(err2 / total) } else { 0.0 };
    EvalReport { err2, opt2, ratio, relative_error, c, r, rank_u, k, exact }
}

/// Evaluates a decomposition, computing `‖A − A_k‖_F²` from scratch.
pub fn evaluate(a: &dyn Matrix, dec: &CurDecomposition) -> Result<EvalReport> {
    evaluate_with_opt(a, dec, tail_energy(a, dec.k)?)
}

/// Evaluates a decomposition against a known `‖A − A_k‖_F²`, using the
/// rank-`k` factorization of `U`.
pub fn evaluate_with_opt(a: &dyn Matrix, dec: &CurDecomposition, opt2: f64) -> Result<EvalReport> {
    let l = dec.c.matmul(&dec.u_left)?;
    let m = dec.u_right.matmul(&dec.r)?;
    let err2 = residual_of_product(a, &l, &m)?;
    let tl = qr(&dec.u_left)?.r;
    let tr = qr(&dec.u_right.transpose())?.r;
    let rank_u = numerical_rank(&tl.matmul_tr(&tr)?)?;
    Ok(report(a, err2, opt2, dec.c.ncols(), dec.r.nrows(), rank_u, dec.k))
}

/// Evaluates explicit `C`, `U`, `R`, as read back from files.
pub fn evaluate_explicit(
    a: &dyn Matrix,
    c: &DenseMatrix,
    u: &DenseMatrix,
    r: &DenseMatrix,
    k: usize,
    opt2: Option<f64>,
) -> Result<EvalReport> {
    let opt2 = match opt2 {
        Some(v) => v,
        None => tail_energy(a, k)?,
    };
    let err2 = residual_of_product(a, &c.matmul(u)?, r)?;
    let rank_u = numerical_rank(u)?;
    Ok(report(a, err2, opt2, c.ncols(), r.nrows(), rank_u, k))
}
