#![allow(dead_code)]

pub mod fixtures;
pub mod fuzz;

use std::fmt::Write as _;
use std::path::Path;

use elate_core::engine::EngineConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const DESCRIPTION: &str =
    "Synthetic daily series. The target depends on recent values of one driver.
x1 (float, nan=no): driver series
x2 (float, nan=no): unrelated series
y (float, nan=no): value to forecast
";

/// The generating feature: mean of x1 over the seven steps before t.
pub const TRUE_FEATURE: &str = "feature \"x1_trailing_mean\": lag(rolling_mean(x1, 7), 1)";

pub const DISTRACTORS: [&str; 19] = [
    "feature \"x2_mean_3\": rolling_mean(x2, 3)",
    "feature \"x2_diff\": diff(x2, 1)",
    "feature \"x2_abs\": abs(x2)",
    "feature \"x2_sq\": x2 * x2",
    "feature \"x2_lag_2\": lag(x2, 2)",
    "feature \"x2_std_5\": rolling_std(x2, 5)",
    "feature \"x2_max_4\": rolling_max(x2, 4)",
    "feature \"x2_min_4\": rolling_min(x2, 4)",
    "feature \"x1_sq\": x1 * x1",
    "feature \"x1_abs\": abs(x1)",
    "feature \"x1_std_3\": rolling_std(x1, 3)",
    "feature \"x1_lag_9\": lag(x1, 9)",
    "feature \"x2_x1\": x2 * x1",
    "feature \"x2_exp\": exp(x2 / 4)",
    "feature \"x1_pos\": x1 > 0",
    "feature \"x2_pos\": x2 > 0",
    "feature \"x2_sum_6\": rolling_sum(x2, 6)",
    "feature \"x2_lag_5\": lag(x2, 5)",
    "feature \"x2_neg\": -x2",
];

/// `rows` daily rows with y_t = 0.8 * mean(x1[t-7..t-1]) + N(0, noise).
pub fn synthetic_csv(rows: usize, noise: f64, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).unwrap();
    let warmup = 7;
    let n = rows + warmup;
    let x1: Vec<f64> = (0..n).map(|_| std.sample(&mut rng)).collect();
    let x2: Vec<f64> = (0..n).map(|_| std.sample(&mut rng)).collect();
    let start = chrono::NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
    let mut out = String::from("date,x1,x2,y\n");
    for t in warmup..n {
        let mean = x1[t - 7..t].iter().sum::<f64>() / 7.0;
        let y = 0.8 * mean + noise * std.sample(&mut rng);
        let date = start + chrono::Duration::days((t - warmup) as i64);
        writeln!(out, "{date},{},{},{y}", x1[t], x2[t]).unwrap();
    }
    out
}

/// Writes the synthetic dataset into `dir` and returns a config pointing at it.
pub fn synthetic_config(dir: &Path, rows: usize, seed: u64) -> EngineConfig {
    let data = dir.join("data.csv");
    let desc = dir.join("description.txt");
    std::fs::write(&data, synthetic_csv(rows, 0.05, seed)).unwrap();
    std::fs::write(&desc, DESCRIPTION).unwrap();
    let mut c = EngineConfig::new(data, desc, "date", "y");
    c.model.n_trees = 40;
    c.model.max_depth = 3;
    c.val_folds = 3;
    c.test_folds = 3;
    c
}

pub fn fenced(program: &str) -> String {
    format!("Here is a feature:\n```\n{program}\n```\n")
}

/// Mock script with each program in its own fenced reply.
pub fn script(programs: &[&str]) -> String {
    programs
        .iter()
        .map(|p| fenced(p))
        .collect::<Vec<_>>()
        .join("---\n")
}

pub fn assert_non_increasing(residuals: &[f64]) {
    for w in residuals.windows(2) {
        assert!(w[1] <= w[0], "residuals increased: {residuals:?}");
    }
}
