use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::stats::nan_median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 4,
            learning_rate: 0.1,
            min_samples_leaf: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(f64),
}

/// A regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Raw output (before the learning-rate scaling) for one imputed row.
    pub fn eval(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    fn eval_columns(&self, x: &[Vec<f64>], i: usize) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    k = if x[feature][i] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf(_) => None,
        })
    }
}

/// Squared-error gradient-boosted regression trees with median imputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    pub base_score: f64,
    pub impute_values: Vec<f64>,
    pub feature_names: Vec<String>,
}

/// Training diagnostics from [`fit_gbt_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    /// Training RMSE after the base score (index 0) and after each tree.
    pub train_rmse: Vec<f64>,
    /// Final fitted values on the training rows.
    pub fitted: Vec<f64>,
}

/// Fits a model on column-major `columns` (one `Vec` per feature).
pub fn fit_gbt(
    columns: &[Vec<f64>],
    y: &[f64],
    names: &[String],
    params: &GbtParams,
) -> Result<GbtModel, ModelError> {
    fit_gbt_traced(columns, y, names, params).map(|(m, _)| m)
}

pub fn fit_gbt_traced(
    columns: &[Vec<f64>],
    y: &[f64],
    names: &[String],
    params: &GbtParams,
) -> Result<(GbtModel, FitTrace), ModelError> {
    let n = y.len();
    if n == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    if columns.is_empty() {
        return Err(ModelError::NoFeatures);
    }
    if names.len() != columns.len() {
        return Err(ModelError::ShapeMismatch {
            expected: columns.len(),
            got: names.len(),
        });
    }
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(ModelError::ShapeMismatch {
            expected: n,
            got: c.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFiniteTarget);
    }

    let impute_values: Vec<f64> = columns
        .iter()
        .map(|c| nan_median(c).unwrap_or(0.0))
        .collect();
    let x: Vec<Vec<f64>> = columns
        .iter()
        .zip(&impute_values)
        .map(|(c, &m)| c.iter().map(|&v| if v.is_nan() { m } else { v }).collect())
        .collect();
    let order: Vec<Vec<usize>> = x
        .iter()
        .map(|c| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| c[a].total_cmp(&c[b]));
            idx
        })
        .collect();

    let base_score = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base_score; n];
    let rmse = |pred: &[f64]| {
        (pred
            .iter()
            .zip(y)
            .map(|(p, t)| (p - t).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt()
    };
    let mut train_rmse = vec![rmse(&pred)];
    let mut trees = Vec::new();

    let constant = y.iter().all(|&v| v == y[0]);
    if !constant {
        for _ in 0..params.n_trees {
            let resid: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| t - p).collect();
            let tree = grow_tree(&x, &order, &resid, params);
            if tree.nodes.len() == 1 {
                break;
            }
            for (i, p) in pred.iter_mut().enumerate() {
                *p += params.learning_rate * tree.eval_columns(&x, i);
            }
            train_rmse.push(rmse(&pred));
            trees.push(tree);
        }
    }

    let model = GbtModel {
        trees,
        learning_rate: params.learning_rate,
        base_score,
        impute_values,
        feature_names: names.to_vec(),
    };
    Ok((
        model,
        FitTrace {
            train_rmse,
            fitted: pred,
        },
    ))
}

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Clone, Copy, Default)]
struct Scan {
    count: usize,
    sum: f64,
    last: f64,
}

/// Grows one tree level by level with exact greedy splits.
///
/// Each level scans every feature's presorted row order once, accumulating
/// left-side statistics for all open nodes at the same time. Ties in gain
/// keep the earliest feature and then the lowest threshold.
fn grow_tree(x: &[Vec<f64>], order: &[Vec<usize>], resid: &[f64], params: &GbtParams) -> Tree {
    const CLOSED: usize = usize::MAX;
    let n = resid.len();
    let min_leaf = params.min_samples_leaf.max(1);
    let mut nodes = vec![Node::Leaf(0.0)];
    // node id per row; CLOSED once the row sits in a finished leaf
    let mut node_of = vec![0usize; n];
    let mut open: Vec<usize> = vec![0];

    for depth in 0..=params.max_depth {
        // slot of each open node in the per-level arrays
        let mut slot = vec![CLOSED; nodes.len()];
        for (s, &id) in open.iter().enumerate() {
            slot[id] = s;
        }
        let mut count = vec![0usize; open.len()];
        let mut sum = vec![0.0; open.len()];
        for i in 0..n {
            if node_of[i] != CLOSED {
                let s = slot[node_of[i]];
                count[s] += 1;
                sum[s] += resid[i];
            }
        }

        let mut best: Vec<Option<Best>> = vec![None; open.len()];
        if depth < params.max_depth {
            for (f, col) in x.iter().enumerate() {
                let mut scan = vec![Scan::default(); open.len()];
                for &i in &order[f] {
                    if node_of[i] == CLOSED {
                        continue;
                    }
                    let s = slot[node_of[i]];
                    let st = &mut scan[s];
                    let v = col[i];
                    if st.count >= min_leaf && v > st.last && count[s] - st.count >= min_leaf {
                        let (nl, nr) = (st.count as f64, (count[s] - st.count) as f64);
                        let sr = sum[s] - st.sum;
                        let gain =
                            st.sum * st.sum / nl + sr * sr / nr - sum[s] * sum[s] / count[s] as f64;
                        if gain > 0.0 && best[s].is_none_or(|b| gain > b.gain) {
                            let mut threshold = st.last + (v - st.last) / 2.0;
                            if threshold >= v {
                                threshold = st.last;
                            }
                            best[s] = Some(Best {
                                gain,
                                feature: f,
                                threshold,
                            });
                        }
                    }
                    st.count += 1;
                    st.sum += resid[i];
                    st.last = v;
                }
            }
        }

        let mut next_open = Vec::new();
        let mut child_of = vec![(0usize, 0usize); open.len()];
        for (s, &id) in open.iter().enumerate() {
            match best[s] {
                Some(b) => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf(0.0));
                    nodes.push(Node::Leaf(0.0));
                    nodes[id] = Node::Split {
                        feature: b.feature,
                        threshold: b.threshold,
                        left,
                        right: left + 1,
                    };
                    child_of[s] = (left, left + 1);
                    next_open.push(left);
                    next_open.push(left + 1);
                }
                None => {
                    nodes[id] = Node::Leaf(if count[s] > 0 {
                        sum[s] / count[s] as f64
                    } else {
                        0.0
                    });
                }
            }
        }
        for i in 0..n {
            let id = node_of[i];
            if id == CLOSED {
                continue;
            }
            let s = slot[id];
            node_of[i] = match (best[s], nodes[id].clone()) {
                (
                    Some(_),
                    Node::Split {
                        feature, threshold, ..
                    },
                ) => {
                    if x[feature][i] <= threshold {
                        child_of[s].0
                    } else {
                        child_of[s].1
                    }
                }
                _ => CLOSED,
            };
        }
        if next_open.is_empty() {
            break;
        }
        open = next_open;
    }
    Tree { nodes }
}

impl GbtModel {
    pub fn n_features(&self) -> usize {
        self.impute_values.len()
    }

    /// Replaces NaN cells with the stored training medians.
    pub fn impute_row(&self, row: &mut [f64]) {
        for (v, &m) in row.iter_mut().zip(&self.impute_values) {
            if v.is_nan() {
                *v = m;
            }
        }
    }

    /// Prediction for one already-imputed row.
    pub fn predict_imputed(&self, row: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.eval(row)).sum::<f64>()
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64, ModelError> {
        if row.len() != self.n_features() {
            return Err(ModelError::ShapeMismatch {
                expected: self.n_features(),
                got: row.len(),
            });
        }
        let mut r = row.to_vec();
        self.impute_row(&mut r);
        Ok(self.predict_imputed(&r))
    }

    /// Predicts column-major `columns`; an empty row count gives an empty output.
    pub fn predict(&self, columns: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        if columns.len() != self.n_features() {
            return Err(ModelError::ShapeMismatch {
                expected: self.n_features(),
                got: columns.len(),
            });
        }
        let n = columns.first().map_or(0, Vec::len);
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(ModelError::ShapeMismatch {
                expected: n,
                got: c.len(),
            });
        }
        let mut row = vec![0.0; columns.len()];
        Ok((0..n)
            .map(|i| {
                for (r, c) in row.iter_mut().zip(columns) {
                    *r = c[i];
                }
                self.impute_row(&mut row);
                self.predict_imputed(&row)
            })
            .collect())
    }
}
