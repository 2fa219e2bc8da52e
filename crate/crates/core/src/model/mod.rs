//! Gradient-boosted regression trees, walk-forward scoring and
//! interventional TreeSHAP.

mod gbt;
mod shap;
mod walk_forward;

use thiserror::Error;

pub use gbt::{fit_gbt, fit_gbt_traced, FitTrace, GbtModel, GbtParams, Node, Tree};
pub use shap::{background_rows, tree_shap, ShapMatrix, MAX_BACKGROUND};
pub use walk_forward::{
    prepare_fold, walk_forward_design, walk_forward_models, walk_forward_score, Design, FoldData,
    FoldScore, WalkForwardScore,
};

use crate::dsl::ExecError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("no feature columns")]
    NoFeatures,
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("training target contains non-finite values")]
    NonFiniteTarget,
    #[error("background set is empty")]
    EmptyBackground,
    #[error("no folds given")]
    NoFolds,
    #[error("no evaluation rows with a known target")]
    NoEvalRows,
    #[error("fold trains on rows up to {train_end} but evaluates from row {eval_start} at an equal or earlier time")]
    Leakage { train_end: usize, eval_start: usize },
    #[error("column `{0}` is not a numeric column of the frame")]
    MissingColumn(String),
    #[error(transparent)]
    Exec(#[from] ExecError),
}
