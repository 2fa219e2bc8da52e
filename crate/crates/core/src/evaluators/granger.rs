use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::stats::is_constant;

/// Significance level for the F test.
pub const GRANGER_ALPHA: f64 = 0.05;

/// Outcome of a pairwise Granger test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrangerTest {
    pub f_stat: f64,
    pub p_value: f64,
    /// Coefficient on `x[t-1]` in the unrestricted model.
    pub b1: f64,
    /// Rows used in the regressions.
    pub n: usize,
}

/// Minimum number of usable regression rows for lag order `p`.
pub fn min_rows(p: usize) -> usize {
    10 * p + 20
}

/// Tests whether lags of `x` improve an autoregression of `y`.
///
/// Both models carry an intercept:
/// unrestricted `y_t = c + Σ a_i y_{t-i} + Σ b_i x_{t-i}` and restricted
/// without the `x` terms. Rows whose response or any regressor is NaN are
/// dropped. Returns `None` when the test is undefined: too few rows, a
/// constant series, or a rank-deficient design.
pub fn granger_test(x: &[f64], y: &[f64], p: usize) -> Option<GrangerTest> {
    assert_eq!(x.len(), y.len(), "series length mismatch");
    if p == 0 || x.len() <= p {
        return None;
    }
    let rows: Vec<usize> = (p..x.len())
        .filter(|&t| (0..=p).all(|i| !y[t - i].is_nan()) && (1..=p).all(|i| !x[t - i].is_nan()))
        .collect();
    let n = rows.len();
    if n < min_rows(p) {
        return None;
    }
    let xs: Vec<f64> = rows
        .iter()
        .flat_map(|&t| (1..=p).map(move |i| x[t - i]))
        .collect();
    let ys: Vec<f64> = rows.iter().map(|&t| y[t]).collect();
    if is_constant(&xs) || is_constant(&ys) {
        return None;
    }

    let full = DMatrix::from_fn(n, 2 * p + 1, |r, c| {
        let t = rows[r];
        match c {
            0 => 1.0,
            c if c <= p => y[t - c],
            c => x[t - (c - p)],
        }
    });
    let restricted = full.columns(0, p + 1).into_owned();
    let target = DVector::from_vec(ys);

    let (beta, rss1) = least_squares(full, &target)?;
    let (_, rss0) = least_squares(restricted, &target)?;

    let df_den = n - 2 * p - 1;
    let b1 = beta[p + 1];
    let (f_stat, p_value) = if rss1 <= 0.0 {
        if rss0 > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            return None;
        }
    } else {
        let f = ((rss0 - rss1).max(0.0) / p as f64) / (rss1 / df_den as f64);
        let dist = FisherSnedecor::new(p as f64, df_den as f64).ok()?;
        (f, dist.sf(f))
    };
    Some(GrangerTest {
        f_stat,
        p_value,
        b1,
        n,
    })
}

/// `|b_1|` if `x` Granger-causes `y` at the 5% level, else 0.
pub fn granger_score(x: &[f64], y: &[f64], p: usize) -> f64 {
    match granger_test(x, y, p) {
        Some(t) if t.p_value < GRANGER_ALPHA && t.b1.is_finite() => t.b1.abs(),
        _ => 0.0,
    }
}

/// OLS via QR; `None` when the design is numerically rank deficient.
fn least_squares(a: DMatrix<f64>, b: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let qr = a.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.ncols()).map(|i| r[(i, i)].abs()).collect();
    let largest = diag.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 || diag.iter().any(|&d| d <= largest * 1e-10) {
        return None;
    }
    let qtb = qr.q().transpose() * b;
    let beta = r.solve_upper_triangular(&qtb)?;
    let resid = b - &a * &beta;
    Some((beta, resid.norm_squared()))
}
