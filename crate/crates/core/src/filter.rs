//! Generational pruning of the candidate population: recursive elimination on
//! TreeSHAP importance with correlation pruning, and the significance-test
//! (FRESH) alternative.

use thiserror::Error;

use crate::data::{Fold, TimeFrame};
use crate::dsl::{execute, DslProgram};
use crate::evaluators::{benjamini_yekutieli, PValueRangeError};
use crate::model::{
    background_rows, tree_shap, walk_forward_models, Design, GbtParams, ModelError, MAX_BACKGROUND,
};
use crate::stats::pearson;

/// Default absolute-correlation threshold above which one of a pair is removed.
pub const DEFAULT_CORR_THRESHOLD: f64 = 0.9;
/// Each elimination round removes `len / PRUNE_DIVISOR` features (at least one).
pub const PRUNE_DIVISOR: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("candidate {0} has no p-value")]
    MissingPValue(usize),
    #[error(transparent)]
    PValue(#[from] PValueRangeError),
}

/// Mean normalized |SHAP| share per feature.
///
/// Shares are taken over base and candidate features together, so
/// `base.iter().sum() + candidates.iter().sum()` is 1 whenever any
/// attribution is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceTable {
    pub base: Vec<f64>,
    pub candidates: Vec<f64>,
    /// Folds that contributed (those with at least one eval row).
    pub folds: usize,
    pub instances: usize,
}

/// Importance of every column of `design`, whose first `n_base` columns are base features.
pub fn design_importance(
    frame: &TimeFrame,
    design: &Design,
    n_base: usize,
    folds: &[Fold],
    params: &GbtParams,
) -> Result<ImportanceTable, ModelError> {
    let m = design.len();
    let mut total = vec![0.0; m];
    let mut used_folds = 0;
    let mut instances = 0;
    for (model, data, _) in walk_forward_models(frame, design, folds, params)? {
        let eval = data.eval_rows();
        if eval.is_empty() {
            continue;
        }
        let train = data.train_rows();
        let bg: Vec<Vec<f64>> = background_rows(train.len(), MAX_BACKGROUND)
            .into_iter()
            .map(|i| train[i].clone())
            .collect();
        let shap = tree_shap(&model, &eval, &bg)?;
        let mut fold_mean = vec![0.0; m];
        for row in &shap.values {
            let l1: f64 = row.iter().map(|v| v.abs()).sum();
            if l1 > 0.0 {
                for (acc, v) in fold_mean.iter_mut().zip(row) {
                    *acc += v.abs() / l1;
                }
            }
        }
        for (t, f) in total.iter_mut().zip(&fold_mean) {
            *t += f / eval.len() as f64;
        }
        used_folds += 1;
        instances += eval.len();
    }
    if used_folds > 0 {
        total.iter_mut().for_each(|t| *t /= used_folds as f64);
    }
    let candidates = total.split_off(n_base);
    Ok(ImportanceTable {
        base: total,
        candidates,
        folds: used_folds,
        instances,
    })
}

/// Trains on base + candidate features per fold and aggregates SHAP shares.
pub fn aggregate_shap_importance(
    frame: &TimeFrame,
    base: &[String],
    candidates: &[DslProgram],
    folds: &[Fold],
    params: &GbtParams,
) -> Result<ImportanceTable, ModelError> {
    let design = Design::build(frame, base, candidates)?;
    design_importance(frame, &design, base.len(), folds, params)
}

/// Indices into `columns` ordered by importance, highest first; ties keep input order.
fn rank(importance: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..importance.len()).collect();
    idx.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]));
    idx
}

/// Greedy correlation pruning over precomputed columns.
///
/// Columns are visited in descending importance (ties: lower index first) and
/// kept if their absolute Pearson correlation with every kept column is at
/// most `threshold`. If fewer than `min_keep` survive, the most important
/// removed columns are restored until `min_keep` is reached. Returns kept
/// indices in visiting order.
pub fn prune_correlated_columns(
    columns: &[Vec<f64>],
    importance: &[f64],
    threshold: f64,
    min_keep: usize,
) -> Vec<usize> {
    let order = rank(importance);
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped: Vec<usize> = Vec::new();
    for &i in &order {
        if kept
            .iter()
            .all(|&k| pearson(&columns[i], &columns[k]).abs() <= threshold)
        {
            kept.push(i);
        } else {
            dropped.push(i);
        }
    }
    let want = min_keep.min(columns.len());
    if kept.len() < want {
        kept.extend(dropped.into_iter().take(want - kept.len()));
        kept.sort_by_key(|i| order.iter().position(|o| o == i));
    }
    kept
}

/// Executes `candidates` on `frame` and prunes highly correlated pairs,
/// keeping the more important member. Returns surviving indices.
pub fn prune_correlated(
    frame: &TimeFrame,
    candidates: &[DslProgram],
    importance: &[f64],
    threshold: f64,
) -> Result<Vec<usize>, ModelError> {
    let columns = candidates
        .iter()
        .map(|p| execute(p, frame))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(prune_correlated_columns(&columns, importance, threshold, 0))
}

/// Result of [`shap_filter`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShapFilterOutcome {
    /// Indices into the candidate slice, most important first when ranked.
    pub selected: Vec<usize>,
    /// Population size at the start and after every elimination round.
    pub trace: Vec<usize>,
}

/// Recursive elimination to exactly `min(keep, candidates.len())` programs.
///
/// Each round recomputes SHAP importance on the survivors, removes correlated
/// duplicates, then drops the least important `max(1, len / 10)` (never going
/// below `keep`).
pub fn shap_filter(
    frame: &TimeFrame,
    base: &[String],
    candidates: &[DslProgram],
    keep: usize,
    folds: &[Fold],
    params: &GbtParams,
    corr_threshold: f64,
) -> Result<ShapFilterOutcome, ModelError> {
    let base_design = Design::build(frame, base, &[])?;
    let cand_cols = candidates
        .iter()
        .map(|p| execute(p, frame))
        .collect::<Result<Vec<_>, _>>()?;
    shap_filter_columns(
        frame,
        &base_design,
        &cand_cols,
        keep,
        folds,
        params,
        corr_threshold,
    )
}

/// [`shap_filter`] over already-executed candidate columns.
pub fn shap_filter_columns(
    frame: &TimeFrame,
    base: &Design,
    candidates: &[Vec<f64>],
    keep: usize,
    folds: &[Fold],
    params: &GbtParams,
    corr_threshold: f64,
) -> Result<ShapFilterOutcome, ModelError> {
    let keep = keep.max(1);
    let mut alive: Vec<usize> = (0..candidates.len()).collect();
    let mut trace = vec![alive.len()];
    if alive.len() <= keep {
        return Ok(ShapFilterOutcome {
            selected: alive,
            trace,
        });
    }
    loop {
        let mut design = base.clone();
        for &i in &alive {
            design.push(format!("candidate_{i}"), candidates[i].clone());
        }
        let table = design_importance(frame, &design, base.len(), folds, params)?;
        let cols: Vec<Vec<f64>> = alive.iter().map(|&i| candidates[i].clone()).collect();
        // positions into `alive`, most important first
        let ranked = prune_correlated_columns(&cols, &table.candidates, corr_threshold, keep);
        let mut survivors: Vec<usize> = ranked.iter().map(|&p| alive[p]).collect();
        if survivors.len() > keep {
            let n_prune = (survivors.len() / PRUNE_DIVISOR)
                .max(1)
                .min(survivors.len() - keep);
            survivors.truncate(survivors.len() - n_prune);
        }
        trace.push(survivors.len());
        if survivors.len() <= keep {
            return Ok(ShapFilterOutcome {
                selected: survivors,
                trace,
            });
        }
        survivors.sort_unstable();
        alive = survivors;
    }
}

/// Benjamini–Yekutieli-adjusts `pvalues` jointly and returns the indices of
/// the `keep` smallest adjusted values (ties: lower index first).
pub fn fresh_filter(pvalues: &[Option<f64>], keep: usize) -> Result<Vec<usize>, FilterError> {
    let raw = pvalues
        .iter()
        .enumerate()
        .map(|(i, p)| p.ok_or(FilterError::MissingPValue(i)))
        .collect::<Result<Vec<f64>, _>>()?;
    let adj = benjamini_yekutieli(&raw)?;
    let mut idx: Vec<usize> = (0..adj.len()).collect();
    idx.sort_by(|&a, &b| adj[a].total_cmp(&adj[b]));
    idx.truncate(keep);
    Ok(idx)
}
