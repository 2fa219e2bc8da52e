//! The evolving feature population: temperature-decayed softmax sampling,
//! prompt assembly, and the generation state machine whose stored best set
//! never gets worse on validation RMSE.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Fold, TimeFrame};
use crate::dsl::{DslProgram, GRAMMAR};
use crate::evaluators::EvalScore;
use crate::filter::{fresh_filter, shap_filter_columns, FilterError};
use crate::model::{walk_forward_design, Design, GbtParams};

pub const DESCRIPTION_PLACEHOLDER: &str = "@@description@@";
pub const EXAMPLES_PLACEHOLDER: &str = "@@examples@@";
pub const HISTORY_PLACEHOLDER: &str = "@@generated features@@";
/// Most recent generated features listed in a prompt.
pub const HISTORY_LIMIT: usize = 250;

pub const DEFAULT_TEMPLATE: &str = "\
You are a data scientist engineering features for a time-series forecasting model.
The model predicts the target column from the columns below, using only values
that are known at prediction time.

Dataset:
@@description@@

Some existing features and why they were written:
@@examples@@

Recently generated features with their relevance scores (higher is better):
@@generated features@@

Write one new feature that is likely to improve the forecast and is not already
listed above. Reply with a single program in a ``` code block, written in the
language below.
";

/// One candidate feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub program: DslProgram,
    pub scores: Option<EvalScore>,
    /// Kendall p-value against the target, present in significance-filter mode.
    pub pvalue: Option<f64>,
    pub created_seq: u64,
}

impl FeatureSpec {
    pub fn name(&self) -> &str {
        self.program.name()
    }

    pub fn source(&self) -> &str {
        self.program.source()
    }

    /// Mean evaluator score, 0 when unscored.
    pub fn score(&self) -> f64 {
        self.scores.as_ref().map_or(0.0, |s| s.mean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbParams {
    /// Population size that triggers a generation rollover.
    pub n_max: usize,
    /// Size of the best set kept at each rollover.
    pub n_keep: usize,
    pub generations: usize,
    /// Example features per prompt.
    pub n_prompt: usize,
    pub t0: f64,
    pub decay_k: f64,
    pub epsilon: f64,
}

impl Default for DbParams {
    fn default() -> Self {
        Self {
            n_max: 100,
            n_keep: 50,
            generations: 10,
            n_prompt: 3,
            t0: 10.0,
            decay_k: 5.0,
            epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DbError {
    #[error("best-set size {n_keep} must be smaller than the population limit {n_max}")]
    KeepTooLarge { n_keep: usize, n_max: usize },
    #[error("generations must be at least 1")]
    NoGenerations,
    #[error("prompt template lacks the {0} placeholder")]
    MissingPlaceholder(&'static str),
    #[error("feature population is empty")]
    EmptyPopulation,
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// Selects a best subset of a population and scores it on validation data.
pub trait Selection {
    /// Indices of the chosen features, at most `keep` of them.
    fn select(&self, fts: &[FeatureSpec], keep: usize) -> Result<Vec<usize>, FilterError>;
    /// Walk-forward validation RMSE of base features plus `set`.
    fn validation_rmse(&self, set: &[FeatureSpec]) -> Result<f64, FilterError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    Shap,
    Fresh,
}

/// Model-backed selection over a working frame.
#[derive(Debug, Clone)]
pub struct ModelSelection {
    pub frame: TimeFrame,
    pub base: Vec<String>,
    pub folds: Vec<Fold>,
    pub mode: FilterMode,
    pub params: GbtParams,
    pub corr_threshold: f64,
}

impl ModelSelection {
    fn design(&self, set: &[FeatureSpec]) -> Result<Design, FilterError> {
        let programs: Vec<DslProgram> = set.iter().map(|f| f.program.clone()).collect();
        Design::build(&self.frame, &self.base, &programs).map_err(FilterError::Model)
    }
}

impl Selection for ModelSelection {
    fn select(&self, fts: &[FeatureSpec], keep: usize) -> Result<Vec<usize>, FilterError> {
        match self.mode {
            FilterMode::Fresh => {
                fresh_filter(&fts.iter().map(|f| f.pvalue).collect::<Vec<_>>(), keep)
            }
            FilterMode::Shap => {
                let base = self.design(&[])?;
                let cols = fts
                    .iter()
                    .map(|f| crate::dsl::execute(&f.program, &self.frame))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| FilterError::Model(e.into()))?;
                let out = shap_filter_columns(
                    &self.frame,
                    &base,
                    &cols,
                    keep,
                    &self.folds,
                    &self.params,
                    self.corr_threshold,
                )?;
                Ok(out.selected)
            }
        }
    }

    fn validation_rmse(&self, set: &[FeatureSpec]) -> Result<f64, FilterError> {
        let design = self.design(set)?;
        Ok(walk_forward_design(&self.frame, &design, &self.folds, &self.params)?.rmse)
    }
}

/// Population state across generations.
#[derive(Debug, Clone)]
pub struct FeatureDb {
    pub params: DbParams,
    pub fts: Vec<FeatureSpec>,
    pub gen: usize,
    /// Validation RMSE of the stored best set, one entry per completed generation.
    pub residuals: Vec<f64>,
    pub best_ft_sets: Vec<Vec<FeatureSpec>>,
    /// (name, mean score) of every feature ever added, oldest first.
    pub gen_fts: Vec<(String, f64)>,
    pub description: String,
    pub template: String,
    next_seq: u64,
}

impl FeatureDb {
    pub fn new(
        params: DbParams,
        description: impl Into<String>,
        template: impl Into<String>,
    ) -> Result<Self, DbError> {
        if params.n_keep >= params.n_max {
            return Err(DbError::KeepTooLarge {
                n_keep: params.n_keep,
                n_max: params.n_max,
            });
        }
        if params.generations == 0 {
            return Err(DbError::NoGenerations);
        }
        let template = template.into();
        for ph in [
            DESCRIPTION_PLACEHOLDER,
            EXAMPLES_PLACEHOLDER,
            HISTORY_PLACEHOLDER,
        ] {
            if !template.contains(ph) {
                return Err(DbError::MissingPlaceholder(ph));
            }
        }
        Ok(Self {
            params,
            fts: Vec::new(),
            gen: 0,
            residuals: Vec::new(),
            best_ft_sets: Vec::new(),
            gen_fts: Vec::new(),
            description: description.into(),
            template,
            next_seq: 0,
        })
    }

    /// Wraps a scored program with the next creation number.
    pub fn make_spec(
        &mut self,
        program: DslProgram,
        scores: Option<EvalScore>,
        pvalue: Option<f64>,
    ) -> FeatureSpec {
        let created_seq = self.next_seq;
        self.next_seq += 1;
        FeatureSpec {
            program,
            scores,
            pvalue,
            created_seq,
        }
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.fts.iter().any(|f| f.name() == name)
    }

    pub fn temperature(&self, n_feat: usize) -> f64 {
        temperature(&self.params, n_feat)
    }

    /// Softmax selection probabilities of the current population.
    pub fn sampling_probabilities(&self) -> Vec<f64> {
        let scores: Vec<f64> = self.fts.iter().map(FeatureSpec::score).collect();
        softmax(&scores, self.temperature(self.fts.len()))
    }

    /// Draws `min(n_prompt, |fts|)` distinct population indices.
    pub fn sample_features<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        sample_without_replacement(&self.sampling_probabilities(), self.params.n_prompt, rng)
    }

    /// Fills the template for the given examples and appends the grammar reference.
    pub fn build_prompt(&self, sampled: &[&FeatureSpec]) -> String {
        let examples = sampled
            .iter()
            .map(|f| format!("```\n{}\n```", f.source().trim_end()))
            .collect::<Vec<_>>()
            .join("\n\n");
        let history = self.history_lines().join("\n");
        let body = self
            .template
            .replace(DESCRIPTION_PLACEHOLDER, &self.description)
            .replace(EXAMPLES_PLACEHOLDER, &examples)
            .replace(HISTORY_PLACEHOLDER, &history);
        format!("{}\n\n{}", body.trim_end(), GRAMMAR)
    }

    /// The last [`HISTORY_LIMIT`] generated features as `name: score` lines.
    pub fn history_lines(&self) -> Vec<String> {
        let start = self.gen_fts.len().saturating_sub(HISTORY_LIMIT);
        self.gen_fts[start..]
            .iter()
            .map(|(name, score)| format!("{name}: {score:.4}"))
            .collect()
    }

    /// Samples examples and builds the prompt.
    pub fn get_prompt<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let idx = self.sample_features(rng);
        let sampled: Vec<&FeatureSpec> = idx.iter().map(|&i| &self.fts[i]).collect();
        self.build_prompt(&sampled)
    }

    /// Appends `f`; at the population limit the generation advances and,
    /// unless the last generation was reached, the population is reset to the
    /// best set. Returns whether a rollover happened.
    pub fn add_feature(
        &mut self,
        f: FeatureSpec,
        selection: &dyn Selection,
    ) -> Result<bool, DbError> {
        self.gen_fts.push((f.name().to_string(), f.score()));
        self.fts.push(f);
        if self.fts.len() < self.params.n_max {
            return Ok(false);
        }
        self.gen += 1;
        if self.gen < self.params.generations {
            self.reset_generation(selection)?;
        }
        Ok(true)
    }

    /// Replaces the population with the (guarded) best set.
    pub fn reset_generation(&mut self, selection: &dyn Selection) -> Result<(), DbError> {
        let best = self.update_best_feature_set(selection)?.to_vec();
        self.fts = best;
        Ok(())
    }

    /// Filters the population and stores the result only if it lowers
    /// validation RMSE; otherwise the previous best set and residual are
    /// carried forward.
    pub fn update_best_feature_set(
        &mut self,
        selection: &dyn Selection,
    ) -> Result<&[FeatureSpec], DbError> {
        if self.fts.is_empty() && self.best_ft_sets.is_empty() {
            return Err(DbError::EmptyPopulation);
        }
        let idx = selection.select(&self.fts, self.params.n_keep)?;
        let candidate: Vec<FeatureSpec> = idx.iter().map(|&i| self.fts[i].clone()).collect();
        let error = selection.validation_rmse(&candidate)?;
        match self.residuals.last() {
            Some(&last) if error.partial_cmp(&last) != Some(std::cmp::Ordering::Less) => {
                let prev = self.best_ft_sets.last().cloned().unwrap_or_default();
                self.best_ft_sets.push(prev);
                self.residuals.push(last);
            }
            _ => {
                self.best_ft_sets.push(candidate);
                self.residuals.push(error);
            }
        }
        Ok(self
            .best_ft_sets
            .last()
            .map(Vec::as_slice)
            .unwrap_or_default())
    }

    /// The latest stored best set (empty before the first update).
    pub fn best_features(&self) -> &[FeatureSpec] {
        self.best_ft_sets
            .last()
            .map(Vec::as_slice)
            .unwrap_or_default()
    }
}

/// `t0 * exp(-k * n_feat / n_max) + epsilon`.
pub fn temperature(params: &DbParams, n_feat: usize) -> f64 {
    params.t0 * (-params.decay_k * n_feat as f64 / params.n_max as f64).exp() + params.epsilon
}

/// Numerically stable softmax of `scores / t`.
pub fn softmax(scores: &[f64], t: f64) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = scores.iter().map(|s| ((s - max) / t).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Sequential weighted draws without replacement, renormalizing after each pick.
pub fn sample_without_replacement<R: Rng + ?Sized>(
    probs: &[f64],
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..probs.len()).collect();
    let mut out = Vec::with_capacity(count.min(probs.len()));
    while out.len() < count && !remaining.is_empty() {
        let total: f64 = remaining.iter().map(|&i| probs[i]).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = remaining.len() - 1;
        for (k, &i) in remaining.iter().enumerate() {
            if u < probs[i] {
                pick = k;
                break;
            }
            u -= probs[i];
        }
        out.push(remaining.remove(pick));
    }
    out
}
