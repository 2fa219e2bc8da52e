use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::featuredb::{DbParams, FilterMode};
use crate::llm::Usage;

use super::EngineError;

/// Outcome counts for proposed candidates. Every proposal lands in exactly one bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateCounts {
    pub proposed: usize,
    pub parse_failed: usize,
    pub validation_failed: usize,
    pub dead_score: usize,
    pub accepted: usize,
}

impl CandidateCounts {
    pub fn add(&mut self, other: &CandidateCounts) {
        self.proposed += other.proposed;
        self.parse_failed += other.parse_failed;
        self.validation_failed += other.validation_failed;
        self.dead_score += other.dead_score;
        self.accepted += other.accepted;
    }

    pub fn is_consistent(&self) -> bool {
        self.parse_failed + self.validation_failed + self.dead_score + self.accepted
            == self.proposed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    /// 1-based generation number.
    pub generation: usize,
    /// Validation RMSE of the stored best set after this generation.
    pub residual: f64,
    pub best_features: Vec<String>,
    pub counts: CandidateCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: usize,
    pub train_end: usize,
    pub validation_end: usize,
    pub test_end: usize,
    pub base_features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub db: DbParams,
    pub filter: FilterMode,
    pub n_resp: usize,
    pub granger_lag: usize,
    pub seed: u64,
}

/// Walk-forward scores on the held-out test region, in train-range-scaled target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub rmse: f64,
    pub mae: f64,
    pub fold_rmse: Vec<Option<f64>>,
    pub base_rmse: f64,
    pub base_mae: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GenerationsCompleted,
    BackendExhausted,
    PromptBudget,
    BackendErrors,
}

/// Machine-readable summary of a `fit` run. Contains no wall-clock values,
/// so two runs with the same inputs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: DatasetSummary,
    pub settings: RunSettings,
    pub seed_features: Vec<String>,
    /// Validation RMSE with base features only.
    pub base_validation_rmse: f64,
    pub generations: Vec<GenerationReport>,
    pub totals: CandidateCounts,
    pub prompts: usize,
    pub llm_errors: usize,
    pub stop_reason: StopReason,
    pub best_features: Vec<String>,
    pub test: TestReport,
    pub usage: Usage,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EngineError> {
        serde_json::from_str(text).map_err(|e| EngineError::Persist(format!("bad report: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Relative reduction of test RMSE against the base-features model.
    pub fn test_improvement(&self) -> f64 {
        1.0 - self.test.rmse / self.test.base_rmse
    }
}

/// Wall-clock measurements, kept apart from the deterministic report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_secs: f64,
    pub setup_secs: f64,
    pub generation_secs: Vec<f64>,
    pub test_secs: f64,
}
