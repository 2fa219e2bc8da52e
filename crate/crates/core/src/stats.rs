//! Small numeric helpers shared across modules.

/// Aligned (x, y) pairs where neither value is NaN.
pub fn complete_pairs(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    x.iter()
        .zip(y)
        .filter(|(a, b)| !a.is_nan() && !b.is_nan())
        .map(|(a, b)| (*a, *b))
        .unzip()
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Median of the non-NaN values, or `None` if there are none.
pub fn nan_median(v: &[f64]) -> Option<f64> {
    let mut vals: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if vals.is_empty() {
        return None;
    }
    vals.sort_by(f64::total_cmp);
    let n = vals.len();
    Some(if n % 2 == 1 {
        vals[n / 2]
    } else {
        0.5 * (vals[n / 2 - 1] + vals[n / 2])
    })
}

/// (min, max) over non-NaN values.
pub fn nan_min_max(v: &[f64]) -> Option<(f64, f64)> {
    v.iter()
        .copied()
        .filter(|x| !x.is_nan())
        .fold(None, |acc, x| match acc {
            None => Some((x, x)),
            Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
        })
}

/// Rescales to [0, 1] using the series' own non-NaN range. Constant series map to 0.
pub fn min_max_normalize(v: &[f64]) -> Vec<f64> {
    match nan_min_max(v) {
        Some((lo, hi)) if hi > lo => v.iter().map(|x| (x - lo) / (hi - lo)).collect(),
        Some(_) => v
            .iter()
            .map(|x| if x.is_nan() { f64::NAN } else { 0.0 })
            .collect(),
        None => v.to_vec(),
    }
}

pub fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

/// Pearson correlation over pairwise-complete rows; 0 when either side is
/// constant or fewer than two complete rows exist.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (x, y) = complete_pairs(x, y);
    if x.len() < 2 {
        return 0.0;
    }
    let mx = mean(&x);
    let my = mean(&y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    let n = pred.len() as f64;
    (pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
}

pub fn mae(pred: &[f64], truth: &[f64]) -> f64 {
    let n = pred.len() as f64;
    pred.iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / n
}
