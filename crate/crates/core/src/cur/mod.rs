//! End-to-end CUR pipelines and decomposition evaluation.
//!
//! Three variants share one skeleton: a rank-`k` factor `Z₁`, a small
//! column seed `C₁` chosen by dual-set sparsification, adaptive columns
//! `C₂`, the best rank-`k` approximation inside span(`C`), and the mirrored
//! row phase. `U` is assembled so that `CUR = Z₂Z₂ᵀAR†R`.

mod eval;
mod pipeline;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::math;
use crate::matrix::DenseMatrix;

pub use eval::{evaluate, evaluate_explicit, evaluate_with_opt, EvalReport};
pub use pipeline::{
    bss_column_seed, cur_deterministic, cur_deterministic_observed, cur_input_sparsity,
    cur_input_sparsity_observed, cur_linear_time, cur_linear_time_observed, decompose, decompose_observed,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Randomized, linear in the dense input size.
    Linear,
    /// Randomized, input-sparsity time.
    Sparse,
    /// Deterministic, polynomial time.
    Deterministic,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Linear => "linear",
            Variant::Sparse => "sparse",
            Variant::Deterministic => "deterministic",
        }
    }

    /// Multiplier `f` in `c₂ = r₂ = ⌈f·k/ε⌉` under `Fidelity::Paper`.
    pub fn paper_factor(self) -> f64 {
        match self {
            Variant::Linear => 1620.0,
            Variant::Sparse => 4820.0,
            Variant::Deterministic => 10.0,
        }
    }

    /// Multiplier under heuristic constants.
    pub fn heuristic_factor(self) -> f64 {
        match self {
            Variant::Linear | Variant::Sparse => 8.0,
            Variant::Deterministic => 10.0,
        }
    }
}

impl core::str::FromStr for Variant {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Variant::Linear),
            "sparse" => Ok(Variant::Sparse),
            "deterministic" => Ok(Variant::Deterministic),
            _ => Err(invalid!("unknown variant `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    /// Constants exactly as proven; errors when the input is too small.
    Paper,
    /// Smaller oversampling; counts are clamped to the input dimensions.
    Heuristic,
}

impl Fidelity {
    pub fn name(self) -> &'static str {
        match self {
            Fidelity::Paper => "paper",
            Fidelity::Heuristic => "heuristic",
        }
    }
}

impl core::str::FromStr for Fidelity {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Fidelity::Paper),
            "heuristic" => Ok(Fidelity::Heuristic),
            _ => Err(invalid!("unknown fidelity `{s}`")),
        }
    }
}

/// Explicit values that replace the computed sample counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overrides {
    pub c1: Option<usize>,
    pub c2: Option<usize>,
    pub r1: Option<usize>,
    pub r2: Option<usize>,
    pub h1: Option<usize>,
    pub h2: Option<usize>,
    pub xi_u: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurConfig {
    pub k: usize,
    pub epsilon: f64,
    pub variant: Variant,
    pub fidelity: Fidelity,
    pub seed: u64,
    /// Extra attempts when a sampled `M = ZᵀΩD` has rank below `k`.
    pub retries: usize,
    pub overrides: Overrides,
}

/// Resolved sample counts for one input shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub c1: usize,
    pub c2: usize,
    pub r1: usize,
    pub r2: usize,
    /// Leverage samples before the column seed.
    pub h1: usize,
    /// Leverage samples before the row seed.
    pub h2: usize,
    /// Embedding dimension for the sketched `U` regression.
    pub xi_u: usize,
}

impl Plan {
    pub fn c(&self) -> usize {
        self.c1 + self.c2
    }

    pub fn r(&self) -> usize {
        self.r1 + self.r2
    }
}

impl CurConfig {
    pub fn new(k: usize, epsilon: f64, variant: Variant) -> Self {
        CurConfig {
            k,
            epsilon,
            variant,
            fidelity: Fidelity::Paper,
            seed: 0,
            retries: 10,
            overrides: Overrides::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_fidelity(mut self, fidelity: Fidelity) -> Self {
        self.fidelity = fidelity;
        self
    }

    pub fn with_overrides(mut self, overrides: Overrides) -> Self {
        self.overrides = overrides;
        self
    }

    /// Sample counts for an `m x n` input.
    pub fn plan(&self, m: usize, n: usize) -> Result<Plan> {
        let k = self.k;
        let eps = self.epsilon;
        if k == 0 {
            return Err(invalid!("rank k must be at least 1"));
        }
        if k >= m.min(n) {
            return Err(invalid!("rank k = {k} must be below min(m, n) = {}", m.min(n)));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(invalid!("epsilon must lie in (0, 1], got {eps}"));
        }
        let kf = k as f64;
        let sampled = self.variant != Variant::Deterministic;
        let log = math::ln(20.0 * kf);
        let mut h1 = math::ceil_usize(16.0 * kf * log);
        let mut h2 = math::ceil_usize(8.0 * kf * log);
        let mut c1 = 4 * k;
        let mut r1 = 4 * k;
        let factor = match self.fidelity {
            Fidelity::Paper => self.variant.paper_factor(),
            Fidelity::Heuristic => self.variant.heuristic_factor(),
        };
        let mut c2 = math::ceil_usize(factor * kf / eps);
        let mut r2 = c2;
        let xi_u = math::ceil_usize(40.0 * kf * kf / (eps * eps));
        if self.fidelity == Fidelity::Heuristic {
            h1 = h1.min(n);
            h2 = h2.min(m);
            c1 = c1.min(if sampled { h1 } else { n });
            r1 = r1.min(if sampled { h2 } else { m });
            c2 = c2.min(n.saturating_sub(c1));
            r2 = r2.min(m.saturating_sub(r1));
        }
        let o = self.overrides;
        let plan = Plan {
            c1: o.c1.unwrap_or(c1),
            c2: o.c2.unwrap_or(c2),
            r1: o.r1.unwrap_or(r1),
            r2: o.r2.unwrap_or(r2),
            h1: o.h1.unwrap_or(h1),
            h2: o.h2.unwrap_or(h2),
            xi_u: o.xi_u.unwrap_or(xi_u),
        };
        if plan.c1 <= k || plan.r1 <= k {
            return Err(invalid!("seed sizes c1 = {}, r1 = {} must exceed k = {k}", plan.c1, plan.r1));
        }
        if plan.c2 == 0 || plan.r2 == 0 || plan.xi_u == 0 {
            return Err(invalid!("adaptive sample counts and xi_u must be positive"));
        }
        if plan.c() > n || plan.r() > m {
            return Err(invalid!(
                "{} constants need c = {} <= n = {n} and r = {} <= m = {m}",
                self.fidelity.name(),
                plan.c(),
                plan.r()
            ));
        }
        if sampled {
            if plan.h1 > n || plan.h2 > m {
                return Err(invalid!("leverage sample counts h1 = {}, h2 = {} exceed the input shape", plan.h1, plan.h2));
            }
            if plan.c1 > plan.h1 || plan.r1 > plan.h2 {
                return Err(invalid!("seed sizes must not exceed the leverage sample counts"));
            }
        }
        Ok(plan)
    }
}

/// Indices into `A` (repeats possible) and the scale attached to each.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub indices: Vec<usize>,
    pub scales: Vec<f64>,
}

impl Selection {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn extend_unscaled(&mut self, idx: &[usize]) {
        self.indices.extend_from_slice(idx);
        self.scales.extend(core::iter::repeat(1.0).take(idx.len()));
    }
}

/// A named squared residual recorded along the pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageResidual {
    pub stage: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub variant: Variant,
    pub fidelity: Fidelity,
    pub seed: u64,
    pub plan: Plan,
    /// Attempts used by the column and row leverage stages (1 = no retry).
    pub column_attempts: usize,
    pub row_attempts: usize,
    pub distinct_columns: usize,
    pub distinct_rows: usize,
    /// `‖A − AZ₁Z₁ᵀ‖²`, `‖A − C₁C₁†A‖²`, `‖A − Π_{C,k}(A)‖²`, `‖A − AR₁†R₁‖²`.
    pub residuals: Vec<StageResidual>,
}

impl Diagnostics {
    pub fn residual(&self, stage: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.stage == stage).map(|r| r.value)
    }
}

/// `A ≈ C·U·R` with `C`, `R` raw columns and rows of `A`.
///
/// Sampling scales are kept in the selections for reference; `U` is
/// computed for the unscaled `C` and `R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurDecomposition {
    pub columns: Selection,
    pub rows: Selection,
    pub c: DenseMatrix,
    pub u: DenseMatrix,
    pub r: DenseMatrix,
    /// `U = u_left · u_right` with inner dimension `k`.
    pub u_left: DenseMatrix,
    pub u_right: DenseMatrix,
    pub k: usize,
    pub diagnostics: Diagnostics,
}

/// Receives the name of each pipeline stage as it starts.
pub trait StageObserver {
    fn stage(&mut self, name: &'static str);
}

impl StageObserver for () {
    fn stage(&mut self, _: &'static str) {}
}
