use alloc::string::ToString;
use alloc::vec::Vec;

use rand::Rng;

use super::{CurConfig, CurDecomposition, Diagnostics, Plan, Selection, StageObserver, StageResidual, Variant};
use crate::adaptive::{
    adaptive_cols, adaptive_cols_d, adaptive_cols_sparse, adaptive_rows, adaptive_rows_d, adaptive_rows_sparse,
    residual_col_norms, residual_row_norms,
};
use crate::approx_svd::{deterministic_svd, projection_residual, randomized_svd, sparse_svd};
use crate::error::{Error, Result};
use crate::matrix::linalg::{dedup_indices, pinv, qr, svd, RangeFactor, RowSpaceFactor};
use crate::matrix::{DenseMatrix, Matrix};
use crate::select::{bss_from_norms, bss_sparse_columns, rand_sampling, WeightedSelection};
use crate::sketch::make_sse;
use crate::subspace::{approx_subspace_svd_factored, best_subspace_svd_factored, SubspaceFactor};

/// Runs the configured variant with a generator seeded from `cfg.seed`.
pub fn decompose(a: &dyn Matrix, cfg: &CurConfig) -> Result<CurDecomposition> {
    decompose_observed(a, cfg, &mut ())
}

pub fn decompose_observed(a: &dyn Matrix, cfg: &CurConfig, obs: &mut dyn StageObserver) -> Result<CurDecomposition> {
    let mut rng = crate::rng_from_seed(cfg.seed);
    match cfg.variant {
        Variant::Linear => cur_linear_time_observed(a, cfg, &mut rng, obs),
        Variant::Sparse => cur_input_sparsity_observed(a, cfg, &mut rng, obs),
        Variant::Deterministic => cur_deterministic_observed(a, cfg, obs),
    }
}

pub fn cur_linear_time<R: Rng + ?Sized>(a: &dyn Matrix, cfg: &CurConfig, rng: &mut R) -> Result<CurDecomposition> {
    cur_linear_time_observed(a, cfg, rng, &mut ())
}

pub fn cur_input_sparsity<R: Rng + ?Sized>(a: &dyn Matrix, cfg: &CurConfig, rng: &mut R) -> Result<CurDecomposition> {
    cur_input_sparsity_observed(a, cfg, rng, &mut ())
}

pub fn cur_deterministic(a: &dyn Matrix, cfg: &CurConfig) -> Result<CurDecomposition> {
    cur_deterministic_observed(a, cfg, &mut ())
}

fn with_variant(cfg: &CurConfig, variant: Variant) -> CurConfig {
    CurConfig { variant, ..cfg.clone() }
}

struct Run<'a> {
    a: &'a dyn Matrix,
    cfg: CurConfig,
    plan: Plan,
    residuals: Vec<StageResidual>,
}

impl<'a> Run<'a> {
    fn new(a: &'a dyn Matrix, cfg: CurConfig) -> Result<Self> {
        let plan = cfg.plan(a.nrows(), a.ncols())?;
        Ok(Run { a, cfg, plan, residuals: Vec::new() })
    }

    fn record(&mut self, stage: &str, value: f64) {
        self.residuals.push(StageResidual { stage: stage.to_string(), value });
    }

    fn span_residual(&self, cols: &Selection) -> Result<f64> {
        let (distinct, _) = dedup_indices(&cols.indices);
        let q = RangeFactor::new(&self.a.select_columns(&distinct))?.q().clone();
        Ok(residual_col_norms(self.a, &q)?.iter().sum())
    }

    fn row_span_residual(&self, rows: &Selection) -> Result<f64> {
        let f = RowSpaceFactor::from_rows(self.a, &rows.indices)?;
        Ok(residual_row_norms(self.a, f.basis())?.iter().sum())
    }

    fn subspace_factor(&self, cols: &Selection) -> Result<RangeFactor> {
        let (distinct, slot) = dedup_indices(&cols.indices);
        RangeFactor::from_distinct(&self.a.select_columns(&distinct), slot)
    }

    /// `(Z₂, Ψ†ΔD⁻¹)` with `YΔ = Z₂D`.
    fn z2(&self, sub: &SubspaceFactor) -> Result<(DenseMatrix, DenseMatrix)> {
        let f = qr(&sub.basis())?;
        let left = sub.psi_pinv_delta()?.matmul(&pinv(&f.r)?)?;
        Ok((f.q, left))
    }

    fn finish(
        self,
        columns: Selection,
        rows: Selection,
        u_left: DenseMatrix,
        u_right: DenseMatrix,
        attempts: (usize, usize),
    ) -> Result<CurDecomposition> {
        let c = self.a.select_columns(&columns.indices);
        let r = self.a.select_rows(&rows.indices);
        let u = u_left.matmul(&u_right)?;
        let diagnostics = Diagnostics {
            variant: self.cfg.variant,
            fidelity: self.cfg.fidelity,
            seed: self.cfg.seed,
            plan: self.plan,
            column_attempts: attempts.0,
            row_attempts: attempts.1,
            distinct_columns: dedup_indices(&columns.indices).0.len(),
            distinct_rows: dedup_indices(&rows.indices).0.len(),
            residuals: self.residuals,
        };
        Ok(CurDecomposition { columns, rows, c, u, r, u_left, u_right, k: self.cfg.k, diagnostics })
    }
}

/// Leverage sampling of the rows of `z` followed by dual-set selection.
///
/// `residual(pair)` returns the sampled residual vectors as the columns of
/// an `ℓ x h` matrix (already rescaled by `D`).
fn leverage_then_bss<R: Rng + ?Sized>(
    stage: &'static str,
    z: &DenseMatrix,
    h: usize,
    count: usize,
    retries: usize,
    sparse: bool,
    rng: &mut R,
    residual: impl Fn(&[usize], &[f64]) -> Result<DenseMatrix>,
) -> Result<(Selection, usize)> {
    let k = z.ncols();
    for attempt in 1..=retries + 1 {
        let pair = rand_sampling(z, h, 1.0, rng)?;
        let m = pair.sample_rows(z).transpose();
        let f = svd(&m)?;
        if f.rank() < k {
            continue;
        }
        let vm = f.v.col_range(0, k);
        let e = residual(&pair.indices, &pair.scales)?;
        let s = if sparse {
            bss_sparse_columns(&vm, &e, count, 0.5, rng)?
        } else {
            bss_from_norms(&vm, &e.col_norms_sq(), count)?
        };
        let sel = Selection {
            indices: s.picks.iter().map(|&(j, _)| pair.indices[j]).collect(),
            scales: s.picks.iter().map(|&(j, w)| pair.scales[j] * crate::math::sqrt(w)).collect(),
        };
        return Ok((sel, attempt));
    }
    Err(Error::RankDeficient { stage, attempts: retries + 1 })
}

fn from_weights(s: &WeightedSelection) -> Selection {
    Selection { indices: s.indices(), scales: s.scales() }
}

/// Column phase of the randomized variants, up to `C₁`.
fn randomized_columns<R: Rng + ?Sized>(run: &Run<'_>, z1: &DenseMatrix, sparse: bool, rng: &mut R) -> Result<(Selection, usize)> {
    let a = run.a;
    let az = a.mul_dense(z1)?;
    leverage_then_bss("columns", z1, run.plan.h1, run.plan.c1, run.cfg.retries, sparse, rng, |idx, scales| {
        let zs = z1.rows_at(idx);
        Ok(a.select_columns(idx).sub(&az.matmul_tr(&zs)?)?.scale_cols(scales))
    })
}

/// Row phase of the randomized variants, up to `R₁`.
fn randomized_rows<R: Rng + ?Sized>(run: &Run<'_>, z2: &DenseMatrix, z2ta: &DenseMatrix, sparse: bool, rng: &mut R) -> Result<(Selection, usize)> {
    let a = run.a;
    leverage_then_bss("rows", z2, run.plan.h2, run.plan.r1, run.cfg.retries, sparse, rng, |idx, scales| {
        let zs = z2.rows_at(idx);
        Ok(a.select_rows(idx).sub(&zs.matmul(z2ta)?)?.scale_rows(scales).transpose())
    })
}

pub fn cur_linear_time_observed<R: Rng + ?Sized>(
    a: &dyn Matrix,
    cfg: &CurConfig,
    rng: &mut R,
    obs: &mut dyn StageObserver,
) -> Result<CurDecomposition> {
    randomized(a, with_variant(cfg, Variant::Linear), false, rng, obs)
}

pub fn cur_input_sparsity_observed<R: Rng + ?Sized>(
    a: &dyn Matrix,
    cfg: &CurConfig,
    rng: &mut R,
    obs: &mut dyn StageObserver,
) -> Result<CurDecomposition> {
    randomized(a, with_variant(cfg, Variant::Sparse), true, rng, obs)
}

fn randomized<R: Rng + ?Sized>(
    a: &dyn Matrix,
    cfg: CurConfig,
    sparse: bool,
    rng: &mut R,
    obs: &mut dyn StageObserver,
) -> Result<CurDecomposition> {
    let mut run = Run::new(a, cfg)?;
    let (k, eps, plan) = (run.cfg.k, run.cfg.epsilon, run.plan);

    obs.stage("z1");
    let z1 = if sparse { sparse_svd(a, k, 1.0, rng)? } else { randomized_svd(a, k, 1.0, rng)? }.z;
    run.record("z1", projection_residual(a, &z1)?);

    obs.stage("c1");
    let (mut cols, col_attempts) = randomized_columns(&run, &z1, sparse, rng)?;
    run.record("c1", run.span_residual(&cols)?);

    obs.stage("c2");
    let c1 = a.select_columns(&cols.indices);
    let draw = if sparse { adaptive_cols_sparse(a, &c1, plan.c2, rng)? } else { adaptive_cols(a, &c1, 1.0, plan.c2, rng)? };
    cols.extend_unscaled(&draw.indices);

    obs.stage("subspace");
    let factor = run.subspace_factor(&cols)?;
    let sub = if sparse {
        approx_subspace_svd_factored(a, factor, k, eps, rng)?
    } else {
        best_subspace_svd_factored(a, factor, k)?
    };
    run.record("c", sub.residual_sq(a)?);
    let (z2, left) = run.z2(&sub)?;
    let z2ta = a.tr_mul_dense(&z2)?.transpose();

    obs.stage("r1");
    let (mut rows, row_attempts) = randomized_rows(&run, &z2, &z2ta, sparse, rng)?;
    run.record("r1", run.row_span_residual(&rows)?);

    obs.stage("r2");
    let r1 = a.select_rows(&rows.indices);
    let draw = if sparse {
        adaptive_rows_sparse(a, &z2, &r1, plan.r2, rng)?
    } else {
        adaptive_rows(a, &z2, &r1, plan.r2, rng)?
    };
    rows.extend_unscaled(&draw.indices);

    obs.stage("u");
    let rf = RowSpaceFactor::from_rows(a, &rows.indices)?;
    let right = if sparse {
        // Y = (W Z₂)† (W A R†), with W a sparse embedding of the m rows.
        let ar = a.mul_dense(&rf.pinv()?)?;
        let w = make_sse(a.nrows(), plan.xi_u, rng)?;
        let sk = w.apply_compact(&z2.hstack(&ar)?)?.mat;
        let r = rows.len();
        pinv(&sk.col_range(0, k))?.matmul(&sk.col_range(k, k + r))?
    } else {
        rf.mul_pinv(&z2ta)?
    };
    run.finish(cols, rows, left, right, (col_attempts, row_attempts))
}

/// `C₁ = AS₁` with `S₁` the dual-set selection for `(Z₁, E₁ᵀ)`, where `Z₁`
/// holds the top-`k` right singular vectors and `E₁ = A − AZ₁Z₁ᵀ`.
pub fn bss_column_seed(a: &dyn Matrix, k: usize, c1: usize) -> Result<Selection> {
    let z1 = deterministic_svd(a, k, 1.0)?.z;
    let e1 = a.to_dense().sub(&a.mul_dense(&z1)?.matmul_tr(&z1)?)?;
    Ok(from_weights(&bss_from_norms(&z1, &e1.col_norms_sq(), c1)?))
}

pub fn cur_deterministic_observed(a: &dyn Matrix, cfg: &CurConfig, obs: &mut dyn StageObserver) -> Result<CurDecomposition> {
    let mut run = Run::new(a, with_variant(cfg, Variant::Deterministic))?;
    let (k, plan) = (run.cfg.k, run.plan);
    let ad = a.to_dense();

    obs.stage("c1");
    let mut cols = bss_column_seed(&ad, k, plan.c1)?;
    run.record("c1", run.span_residual(&cols)?);

    obs.stage("c2");
    let c1 = ad.columns(&cols.indices);
    let extra = adaptive_cols_d(&ad, &c1, plan.c2, k)?;
    cols.extend_unscaled(&extra.indices);

    obs.stage("subspace");
    let sub = best_subspace_svd_factored(&ad, run.subspace_factor(&cols)?, k)?;
    run.record("c", sub.residual_sq(&ad)?);
    let (z2, left) = run.z2(&sub)?;
    let z2ta = z2.tr_matmul(&ad)?;

    obs.stage("r1");
    let e2t = ad.sub(&z2.matmul(&z2ta)?)?;
    let mut rows = from_weights(&bss_from_norms(&z2, &e2t.row_norms_sq(), plan.r1)?);
    run.record("r1", run.row_span_residual(&rows)?);

    obs.stage("r2");
    let r1 = ad.rows_at(&rows.indices);
    let extra = adaptive_rows_d(&ad, &z2, &r1, plan.r2)?;
    rows.extend_unscaled(&extra.indices);

    obs.stage("u");
    let right = RowSpaceFactor::from_rows(&ad, &rows.indices)?.mul_pinv(&z2ta)?;
    run.finish(cols, rows, left, right, (1, 1))
}
