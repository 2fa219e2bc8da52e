use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::digamma;

use crate::stats::{complete_pairs, is_constant};

/// Neighbour count of the estimator.
pub const MI_K: usize = 3;
/// Fewer complete pairs than this yields 0.
pub const MI_MIN_PAIRS: usize = 50;

const JITTER: f64 = 1e-10;
const JITTER_SEED: u64 = 0x005e_ed0f_1ab5;

/// Kraskov–Stögbauer–Grassberger (first variant) mutual information in nats,
/// clamped at 0.
///
/// Both margins are replaced by their normalized average ranks before the
/// neighbour search; mutual information is invariant under that map, and it
/// makes the estimate exactly invariant under any strictly increasing
/// rescaling of either series. Ties are broken by a fixed, tiny jitter.
pub fn mi_score(x: &[f64], y: &[f64]) -> f64 {
    let (xs, ys) = complete_pairs(x, y);
    if xs.len() < MI_MIN_PAIRS || is_constant(&xs) || is_constant(&ys) {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(JITTER_SEED);
    let mut u = ranks(&xs);
    let mut v = ranks(&ys);
    for r in u.iter_mut().chain(v.iter_mut()) {
        *r += JITTER * rng.random_range(-1.0..1.0);
    }
    ksg(&u, &v, MI_K).max(0.0)
}

/// Average ranks scaled to (0, 1].
fn ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg / n as f64;
        }
        i = j + 1;
    }
    out
}

#[derive(PartialEq)]
struct Dist(f64);
impl Eq for Dist {}
impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Raw KSG estimate for continuous samples without ties.
pub(crate) fn ksg(x: &[f64], y: &[f64], k: usize) -> f64 {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut y_sorted = ys.clone();
    y_sorted.sort_by(f64::total_cmp);

    let count_within = |sorted: &[f64], c: f64, eps: f64| -> usize {
        let lo = sorted.partition_point(|&v| v <= c - eps);
        let hi = sorted.partition_point(|&v| v < c + eps);
        hi - lo - 1
    };

    let mut acc = 0.0;
    let mut heap: BinaryHeap<Dist> = BinaryHeap::with_capacity(k + 1);
    for i in 0..n {
        heap.clear();
        let (mut lo, mut hi) = (i, i + 1);
        loop {
            let kth = if heap.len() == k {
                heap.peek().map(|d| d.0)
            } else {
                None
            };
            let left = (lo > 0).then(|| xs[i] - xs[lo - 1]);
            let right = (hi < n).then(|| xs[hi] - xs[i]);
            let (j, dx) = match (left, right) {
                (Some(l), Some(r)) if l <= r => (lo - 1, l),
                (Some(_), Some(r)) => (hi, r),
                (Some(l), None) => (lo - 1, l),
                (None, Some(r)) => (hi, r),
                (None, None) => break,
            };
            if matches!(kth, Some(d) if dx >= d) {
                break;
            }
            if j < i {
                lo -= 1;
            } else {
                hi += 1;
            }
            let d = dx.max((ys[j] - ys[i]).abs());
            if heap.len() < k {
                heap.push(Dist(d));
            } else if d < heap.peek().unwrap().0 {
                heap.pop();
                heap.push(Dist(d));
            }
        }
        let eps = heap.peek().map(|d| d.0).unwrap_or(0.0);
        let nx = count_within(&xs, xs[i], eps);
        let ny = count_within(&y_sorted, ys[i], eps);
        acc += digamma(nx as f64 + 1.0) + digamma(ny as f64 + 1.0);
    }
    digamma(k as f64) + digamma(n as f64) - acc / n as f64
}
