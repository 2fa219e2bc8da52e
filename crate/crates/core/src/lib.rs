//! Evolutionary, language-model-driven feature engineering for multivariate
//! time-series forecasting.
//!
//! A language model proposes feature programs written in a small, sandboxed
//! transformation language ([`dsl`]). Each program is executed against a
//! [`data::TimeFrame`], scored by fast statistical relevance measures
//! ([`evaluators`]), and stored in a population ([`featuredb`]). When the
//! population is full, a gradient-boosted-tree model with interventional
//! TreeSHAP ([`model`], [`filter`]) prunes it back to the best set, which is
//! only adopted if it lowers walk-forward validation RMSE. [`engine`] drives
//! the loop; [`llm`] speaks to the proposal backend.

pub mod data;
pub mod dsl;
pub mod engine;
pub mod evaluators;
pub mod featuredb;
pub mod filter;
pub mod llm;
pub mod model;
pub mod stats;

pub use data::{Column, ColumnKind, DatasetDescription, Schema, SplitSpec, TimeFrame};
pub use dsl::{DslProgram, Expr};
pub use engine::{EngineConfig, FitOutcome, RunReport};
pub use evaluators::EvalScore;
pub use featuredb::{FeatureDb, FeatureSpec};
pub use model::{GbtModel, GbtParams, ShapMatrix};
