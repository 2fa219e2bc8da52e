use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gbt::{fit_gbt, GbtModel, GbtParams};
use super::ModelError;
use crate::data::{Fold, TimeFrame};
use crate::dsl::{execute, DslProgram};
use crate::stats::nan_min_max;

/// Named, column-major feature matrix aligned with a frame's rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Design {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Design {
    /// Base columns (by name) followed by each program's output on the full frame.
    pub fn build(
        frame: &TimeFrame,
        base: &[String],
        programs: &[DslProgram],
    ) -> Result<Self, ModelError> {
        let mut d = Design::default();
        for name in base {
            let col = frame
                .numeric(name)
                .ok_or_else(|| ModelError::MissingColumn(name.clone()))?;
            d.push(name.clone(), col.to_vec());
        }
        for p in programs {
            d.push(p.name().to_string(), execute(p, frame)?);
        }
        Ok(d)
    }

    pub fn push(&mut self, name: String, column: Vec<f64>) {
        self.names.push(name);
        self.columns.push(column);
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// One fold's scaled train and eval data, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldData {
    pub train_x: Vec<Vec<f64>>,
    pub train_y: Vec<f64>,
    pub eval_x: Vec<Vec<f64>>,
    pub eval_y: Vec<f64>,
}

impl FoldData {
    /// Row-major copy of the eval block.
    pub fn eval_rows(&self) -> Vec<Vec<f64>> {
        (0..self.eval_y.len())
            .map(|i| self.eval_x.iter().map(|c| c[i]).collect())
            .collect()
    }

    pub fn train_rows(&self) -> Vec<Vec<f64>> {
        (0..self.train_y.len())
            .map(|i| self.train_x.iter().map(|c| c[i]).collect())
            .collect()
    }
}

/// Affine map onto [0, 1] using the train-range span; a zero span maps train values to 0.
fn scaler(train: impl Iterator<Item = f64>) -> impl Fn(f64) -> f64 {
    let vals: Vec<f64> = train.collect();
    let (lo, hi) = nan_min_max(&vals).unwrap_or((0.0, 1.0));
    let span = if hi > lo { hi - lo } else { 1.0 };
    move |v| (v - lo) / span
}

/// Slices, filters and scales a fold.
///
/// Rows with a NaN target are dropped. Feature and target scaling use the
/// train rows only. Fails if any train timestamp is not strictly earlier
/// than every eval timestamp.
pub fn prepare_fold(
    frame: &TimeFrame,
    design: &Design,
    fold: &Fold,
) -> Result<FoldData, ModelError> {
    let ts = frame.timestamps();
    if !fold.train.is_empty() && !fold.eval.is_empty() {
        let last_train = ts[fold.train.clone()].iter().max().copied();
        let first_eval = ts[fold.eval.clone()].iter().min().copied();
        if let (Some(a), Some(b)) = (last_train, first_eval) {
            if a >= b {
                return Err(ModelError::Leakage {
                    train_end: fold.train.end,
                    eval_start: fold.eval.start,
                });
            }
        }
    }
    let y = frame.target();
    let train: Vec<usize> = fold.train.clone().filter(|&i| !y[i].is_nan()).collect();
    let eval: Vec<usize> = fold.eval.clone().filter(|&i| !y[i].is_nan()).collect();
    if train.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let sy = scaler(train.iter().map(|&i| y[i]));
    let mut data = FoldData {
        train_x: Vec::with_capacity(design.len()),
        train_y: train.iter().map(|&i| sy(y[i])).collect(),
        eval_x: Vec::with_capacity(design.len()),
        eval_y: eval.iter().map(|&i| sy(y[i])).collect(),
    };
    for col in &design.columns {
        let s = scaler(train.iter().map(|&i| col[i]));
        data.train_x
            .push(train.iter().map(|&i| s(col[i])).collect());
        data.eval_x.push(eval.iter().map(|&i| s(col[i])).collect());
    }
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub rmse: f64,
    pub mae: f64,
    pub n_eval: usize,
}

/// Pooled and per-fold errors, in units of the train-range-scaled target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkForwardScore {
    pub rmse: f64,
    pub mae: f64,
    pub folds: Vec<FoldScore>,
}

/// Fits and predicts every fold of `design`, returning the fitted models too.
pub fn walk_forward_models(
    frame: &TimeFrame,
    design: &Design,
    folds: &[Fold],
    params: &GbtParams,
) -> Result<Vec<(GbtModel, FoldData, Vec<f64>)>, ModelError> {
    if folds.is_empty() {
        return Err(ModelError::NoFolds);
    }
    folds
        .par_iter()
        .map(|fold| {
            let data = prepare_fold(frame, design, fold)?;
            let model = fit_gbt(&data.train_x, &data.train_y, &design.names, params)?;
            let pred = model.predict(&data.eval_x)?;
            Ok((model, data, pred))
        })
        .collect()
}

/// Walk-forward RMSE/MAE of a model trained on `design`.
pub fn walk_forward_design(
    frame: &TimeFrame,
    design: &Design,
    folds: &[Fold],
    params: &GbtParams,
) -> Result<WalkForwardScore, ModelError> {
    let fitted = walk_forward_models(frame, design, folds, params)?;
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut n = 0usize;
    let mut per = Vec::with_capacity(fitted.len());
    for (_, data, pred) in &fitted {
        let (mut fs, mut fa) = (0.0, 0.0);
        for (p, t) in pred.iter().zip(&data.eval_y) {
            fs += (p - t).powi(2);
            fa += (p - t).abs();
        }
        let k = pred.len();
        per.push(FoldScore {
            rmse: if k > 0 {
                (fs / k as f64).sqrt()
            } else {
                f64::NAN
            },
            mae: if k > 0 { fa / k as f64 } else { f64::NAN },
            n_eval: k,
        });
        sq += fs;
        abs += fa;
        n += k;
    }
    if n == 0 {
        return Err(ModelError::NoEvalRows);
    }
    Ok(WalkForwardScore {
        rmse: (sq / n as f64).sqrt(),
        mae: abs / n as f64,
        folds: per,
    })
}

/// Executes `programs` on the full frame and scores base + programs by walk-forward validation.
pub fn walk_forward_score(
    frame: &TimeFrame,
    base: &[String],
    programs: &[DslProgram],
    folds: &[Fold],
    params: &GbtParams,
) -> Result<WalkForwardScore, ModelError> {
    let design = Design::build(frame, base, programs)?;
    walk_forward_design(frame, &design, folds, params)
}
