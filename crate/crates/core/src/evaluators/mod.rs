//! Fast relevance measures between a candidate feature and the target.

mod granger;
mod mi;
mod significance;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use granger::{
    granger_score, granger_test, min_rows as granger_min_rows, GrangerTest, GRANGER_ALPHA,
};
pub use mi::{mi_score, MI_K, MI_MIN_PAIRS};
pub use significance::{
    benjamini_yekutieli, kendall_pvalue, kendall_tau, PValueRangeError, KENDALL_MIN_PAIRS,
};

use crate::stats::min_max_normalize;

pub const GRANGER: &str = "granger";
pub const MUTUAL_INFO: &str = "mutual_info";
pub const KENDALL: &str = "kendall";

/// Default autoregressive lag order for the Granger test.
pub const DEFAULT_GRANGER_LAG: usize = 4;

/// Per-evaluator scores and their arithmetic mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalScore {
    pub per_evaluator: BTreeMap<String, f64>,
    pub mean: f64,
}

impl EvalScore {
    pub fn new(per_evaluator: BTreeMap<String, f64>) -> Self {
        let mean = if per_evaluator.is_empty() {
            0.0
        } else {
            per_evaluator.values().sum::<f64>() / per_evaluator.len() as f64
        };
        Self {
            per_evaluator,
            mean,
        }
    }

    /// A feature is dead when every evaluator scored it 0.
    pub fn is_dead(&self) -> bool {
        self.per_evaluator.values().all(|&v| v == 0.0)
    }
}

/// Granger and mutual-information scores on min-max normalized series, and their mean.
pub fn combined_score(x: &[f64], y: &[f64], granger_lag: usize) -> EvalScore {
    let xn = min_max_normalize(x);
    let yn = min_max_normalize(y);
    let sanitize = |v: f64| if v.is_finite() && v > 0.0 { v } else { 0.0 };
    let mut per = BTreeMap::new();
    per.insert(
        GRANGER.to_string(),
        sanitize(granger_score(&xn, &yn, granger_lag)),
    );
    per.insert(MUTUAL_INFO.to_string(), sanitize(mi_score(&xn, &yn)));
    EvalScore::new(per)
}

/// Significance score for the FRESH filter: the Kendall p-value, and a score
/// of `1 - p` so that more significant features rank higher when sampled.
pub fn fresh_score(x: &[f64], y: &[f64]) -> (EvalScore, f64) {
    let p = kendall_pvalue(x, y);
    let mut per = BTreeMap::new();
    per.insert(KENDALL.to_string(), 1.0 - p);
    (EvalScore::new(per), p)
}
