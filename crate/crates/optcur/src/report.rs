//! Run reports and stage timing.

use std::time::Instant;

use optcur_core::cur::{CurConfig, Diagnostics, EvalReport, Fidelity, Selection, StageObserver, Variant};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDescriptor {
    pub path: String,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    /// `dense` or `sparse`.
    pub storage: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Everything needed to reproduce and audit one `decompose` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub input: InputDescriptor,
    pub variant: Variant,
    pub fidelity: Fidelity,
    /// Seed of the kept trial.
    pub seed: u64,
    /// Configuration of the kept trial.
    pub config: CurConfig,
    pub trial: usize,
    pub trials: usize,
    /// Ratio of every trial, in order.
    pub trial_ratios: Vec<Option<f64>>,
    pub evaluation: EvalReport,
    pub columns: Selection,
    pub rows: Selection,
    pub diagnostics: Diagnostics,
    pub timings: Vec<StageTiming>,
}

impl RunReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Records wall-clock time per pipeline stage.
pub struct Timer {
    current: Option<(&'static str, Instant)>,
    timings: Vec<StageTiming>,
}

impl Timer {
    pub fn new() -> Self {
        Timer { current: None, timings: Vec::new() }
    }

    fn close(&mut self) {
        if let Some((stage, t)) = self.current.take() {
            self.timings.push(StageTiming { stage: stage.to_string(), seconds: t.elapsed().as_secs_f64() });
        }
    }

    pub fn finish(mut self) -> Vec<StageTiming> {
        self.close();
        self.timings
    }
}

impl Default for Timer {
    fn default() -> Self {
        Self::new()
    }
}

impl StageObserver for Timer {
    fn stage(&mut self, name: &'static str) {
        self.close();
        self.current = Some((name, Instant::now()));
    }
}
