use elate_core::evaluators::{
    benjamini_yekutieli, combined_score, granger_score, granger_test, kendall_pvalue, mi_score,
    GRANGER, MUTUAL_INFO,
};
use elate_core::stats::pearson;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for t in 1..n {
        let e: f64 = StandardNormal.sample(rng);
        v[t] = phi * v[t - 1] + e;
    }
    v
}

fn gaussian_pair(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let x = normals(rng, n);
    let e = normals(rng, n);
    let y = x
        .iter()
        .zip(&e)
        .map(|(a, b)| rho * a + (1.0 - rho * rho).sqrt() * b)
        .collect();
    (x, y)
}

/// Plug-in MI from an equal-width 2-D histogram.
fn histogram_mi(x: &[f64], y: &[f64], bins: usize) -> f64 {
    let bin = |v: &[f64]| -> Vec<usize> {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        v.iter()
            .map(|a| (((a - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1))
            .collect()
    };
    let (bx, by) = (bin(x), bin(y));
    let n = x.len() as f64;
    let mut joint = vec![vec![0.0; bins]; bins];
    for (i, j) in bx.iter().zip(&by) {
        joint[*i][*j] += 1.0 / n;
    }
    let px: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let py: Vec<f64> = (0..bins)
        .map(|j| joint.iter().map(|r| r[j]).sum())
        .collect();
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            if joint[i][j] > 0.0 {
                mi += joint[i][j] * (joint[i][j] / (px[i] * py[j])).ln();
            }
        }
    }
    mi
}

#[test]
fn granger_null_rejects_about_five_percent() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let trials = 200;
    let rejections = (0..trials)
        .filter(|_| {
            let x = ar1(&mut rng, 300, 0.5);
            let y = ar1(&mut rng, 300, 0.5);
            granger_score(&x, &y, 4) > 0.0
        })
        .count();
    let frac = rejections as f64 / trials as f64;
    assert!((0.02..=0.08).contains(&frac), "rejection fraction {frac}");
}

#[test]
fn granger_recovers_known_coefficient() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = normals(&mut rng, 1000);
    let mut y = vec![0.0; 1000];
    for t in 1..1000 {
        let e: f64 = StandardNormal.sample(&mut rng);
        y[t] = 0.9 * x[t - 1] + 0.01 * e;
    }
    let score = granger_score(&x, &y, 4);
    assert!((score - 0.9).abs() < 0.05, "{score}");
    let test = granger_test(&x, &y, 4).unwrap();
    assert!(test.p_value < 1e-10);
}

#[test]
fn granger_drops_nan_rows_and_handles_degenerate_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut x = normals(&mut rng, 400);
    let mut y = vec![0.0; 400];
    for t in 1..400 {
        y[t] = 0.8 * x[t - 1] + 0.1 * normals(&mut rng, 1)[0];
    }
    x[50] = f64::NAN;
    y[200] = f64::NAN;
    assert!((granger_score(&x, &y, 2) - 0.8).abs() < 0.05);
    assert_eq!(granger_score(&vec![3.0; 400], &y, 2), 0.0);
    assert_eq!(granger_score(&x[..30], &y[..30], 2), 0.0);
}

#[test]
fn mi_gaussian_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for rho in [0.0, 0.5, 0.9] {
        let (x, y) = gaussian_pair(&mut rng, 5000, rho);
        let want = -0.5 * (1.0f64 - rho * rho).ln();
        let got = mi_score(&x, &y);
        assert!((got - want).abs() < 0.1, "rho {rho}: {got} vs {want}");
    }
}

#[test]
fn mi_independent_uniforms_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let x: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
    let y: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
    assert!(mi_score(&x, &y) < 0.05);
}

#[test]
fn mi_detects_nonlinear_dependence() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let x: Vec<f64> = (0..2000).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| v * v).collect();
    assert!(pearson(&x, &y).abs() < 0.1);
    let ksg = mi_score(&x, &y);
    assert!(ksg > 0.5, "{ksg}");
    let hist = histogram_mi(&x, &y, 20);
    assert!(hist > 0.5, "{hist}");
}

#[test]
fn mi_exactly_invariant_under_increasing_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let (x, y) = gaussian_pair(&mut rng, 500, 0.6);
    let base = mi_score(&x, &y);
    let scaled: Vec<f64> = x.iter().map(|v| v * 37.5).collect();
    let shifted: Vec<f64> = x.iter().map(|v| v + 1e3).collect();
    let warped: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    assert_eq!(mi_score(&scaled, &y), base);
    assert_eq!(mi_score(&shifted, &y), base);
    assert_eq!(mi_score(&warped, &y), base);
}

#[test]
fn lagged_target_scores_on_ar1() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let y = ar1(&mut rng, 600, 0.8);
    let lagged: Vec<f64> = std::iter::once(f64::NAN)
        .chain(y[..599].iter().copied())
        .collect();
    let s = combined_score(&lagged, &y, 4);
    assert!(s.mean > 0.0);
    assert!(s.per_evaluator[MUTUAL_INFO] > 0.0);
    assert!(s.per_evaluator.contains_key(GRANGER));
}

#[test]
fn kendall_null_calibration() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let hits = (0..200)
        .filter(|_| {
            let x = normals(&mut rng, 100);
            let y = normals(&mut rng, 100);
            kendall_pvalue(&x, &y) < 0.05
        })
        .count();
    let frac = hits as f64 / 200.0;
    assert!((0.02..=0.09).contains(&frac), "{frac}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn combined_score_non_negative(seed in 0u64..10_000, rho in -1.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = gaussian_pair(&mut rng, 200, rho * 0.99);
        let s = combined_score(&x, &y, 4);
        prop_assert!(s.mean >= 0.0 && s.per_evaluator.values().all(|v| v.is_finite() && *v >= 0.0));
        prop_assert_eq!(s.is_dead(), s.per_evaluator.values().all(|v| *v == 0.0));
    }

    #[test]
    fn granger_decision_invariant_to_shift(seed in 0u64..10_000, c in -100.0f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normals(&mut rng, 300);
        let mut y = ar1(&mut rng, 300, 0.3);
        for t in 1..300 { y[t] += 0.3 * x[t - 1]; }
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let a = granger_test(&x, &y, 4).unwrap();
        let b = granger_test(&shifted, &y, 4).unwrap();
        prop_assert!((a.p_value - b.p_value).abs() < 1e-9);
        prop_assert_eq!(granger_score(&x, &y, 4) > 0.0, granger_score(&shifted, &y, 4) > 0.0);
    }

    #[test]
    fn by_is_monotone_and_bounded(p in proptest::collection::vec(0.0f64..=1.0, 1..40)) {
        let adj = benjamini_yekutieli(&p).unwrap();
        for i in 0..p.len() {
            prop_assert!(adj[i] >= p[i] - 1e-15 && adj[i] <= 1.0);
            for j in 0..p.len() {
                if p[i] <= p[j] {
                    prop_assert!(adj[i] <= adj[j]);
                }
            }
        }
    }
}
