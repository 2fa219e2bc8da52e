use statrs::function::erf::erfc;
use thiserror::Error;

use crate::stats::{complete_pairs, is_constant};

/// Fewer complete pairs than this yields p = 1.
pub const KENDALL_MIN_PAIRS: usize = 30;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("p-value {value} at position {index} is outside [0, 1]")]
pub struct PValueRangeError {
    pub index: usize,
    pub value: f64,
}

/// Kendall's tau-b between `x` and `y` (complete pairs only), or `None` if undefined.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Option<f64> {
    let (xs, ys) = complete_pairs(x, y);
    let c = KendallCounts::new(&xs, &ys)?;
    Some(c.s / ((c.n0 - c.n1) * (c.n0 - c.n2)).sqrt())
}

/// Two-sided p-value of Kendall's tau test, normal approximation with the
/// tie-corrected variance of the S statistic.
pub fn kendall_pvalue(x: &[f64], y: &[f64]) -> f64 {
    let (xs, ys) = complete_pairs(x, y);
    if xs.len() < KENDALL_MIN_PAIRS || is_constant(&xs) || is_constant(&ys) {
        return 1.0;
    }
    let Some(c) = KendallCounts::new(&xs, &ys) else {
        return 1.0;
    };
    let n = xs.len() as f64;
    let var = (n * (n - 1.0) * (2.0 * n + 5.0) - c.vt - c.vu) / 18.0
        + c.t1 * c.u1 / (2.0 * n * (n - 1.0))
        + c.t2 * c.u2 / (9.0 * n * (n - 1.0) * (n - 2.0));
    if var <= 0.0 {
        return 1.0;
    }
    let z = c.s / var.sqrt();
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Pair and tie counts for tau-b, computed in O(n log n).
struct KendallCounts {
    /// Concordant minus discordant pairs.
    s: f64,
    n0: f64,
    n1: f64,
    n2: f64,
    vt: f64,
    vu: f64,
    t1: f64,
    u1: f64,
    t2: f64,
    u2: f64,
}

struct TieSums {
    pairs: f64,
    v: f64,
    t1: f64,
    t2: f64,
}

/// Sums over runs of equal values in a sorted slice.
fn tie_sums(sorted: &[f64]) -> TieSums {
    let mut out = TieSums {
        pairs: 0.0,
        v: 0.0,
        t1: 0.0,
        t2: 0.0,
    };
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        out.pairs += t * (t - 1.0) / 2.0;
        out.v += t * (t - 1.0) * (2.0 * t + 5.0);
        out.t1 += t * (t - 1.0);
        out.t2 += t * (t - 1.0) * (t - 2.0);
        i = j;
    }
    out
}

impl KendallCounts {
    fn new(x: &[f64], y: &[f64]) -> Option<Self> {
        let n = x.len();
        if n < 2 {
            return None;
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

        // pairs tied on both x and y
        let mut n3 = 0.0;
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && x[idx[j]] == x[idx[i]] && y[idx[j]] == y[idx[i]] {
                j += 1;
            }
            let t = (j - i) as f64;
            n3 += t * (t - 1.0) / 2.0;
            i = j;
        }

        let xs: Vec<f64> = idx.iter().map(|&k| x[k]).collect();
        let mut ys: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
        let tx = tie_sums(&xs);
        let swaps = merge_sort_swaps(&mut ys);
        let ty = tie_sums(&ys);

        let n0 = n as f64 * (n as f64 - 1.0) / 2.0;
        let s = n0 - tx.pairs - ty.pairs + n3 - 2.0 * swaps;
        if n0 == tx.pairs || n0 == ty.pairs {
            return None;
        }
        Some(Self {
            s,
            n0,
            n1: tx.pairs,
            n2: ty.pairs,
            vt: tx.v,
            vu: ty.v,
            t1: tx.t1,
            u1: ty.t1,
            t2: tx.t2,
            u2: ty.t2,
        })
    }
}

/// Sorts `v` ascending and returns the number of strictly inverted pairs.
fn merge_sort_swaps(v: &mut [f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let mid = n / 2;
    let mut swaps = merge_sort_swaps(&mut v[..mid]) + merge_sort_swaps(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            merged.push(v[j]);
            swaps += (mid - i) as f64;
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

/// Benjamini–Yekutieli step-up adjustment, returned in input order.
pub fn benjamini_yekutieli(pvals: &[f64]) -> Result<Vec<f64>, PValueRangeError> {
    if let Some((index, &value)) = pvals
        .iter()
        .enumerate()
        .find(|(_, p)| !(0.0..=1.0).contains(*p))
    {
        return Err(PValueRangeError { index, value });
    }
    let m = pvals.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let c: f64 = (1..=m).map(|k| 1.0 / k as f64).sum();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut adj = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        let scaled = (pvals[i] * m as f64 * c / (rank + 1) as f64).min(1.0);
        running = running.min(scaled);
        adj[i] = running;
    }
    Ok(adj)
}
