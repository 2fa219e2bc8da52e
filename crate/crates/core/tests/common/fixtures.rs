//! Hand-built 5-row fixtures with straight-line expected outputs.

use elate_core::data::{Column, TimeFrame};
use elate_core::dsl::{execute, validate, DslProgram};

use super::fuzz::bits_equal;

const N: f64 = f64::NAN;
const X: [f64; 5] = [1.0, -2.0, 4.0, N, 3.0];
const Z: [f64; 5] = [2.0, 2.0, 0.0, 1.0, 5.0];

pub fn fixture_frame() -> TimeFrame {
    let cols = vec![
        ("x".to_string(), Column::Numeric(X.to_vec())),
        ("z".to_string(), Column::Numeric(Z.to_vec())),
        (
            "g".to_string(),
            Column::Categorical(["a", "b", "a", "b", "a"].map(String::from).to_vec()),
        ),
        ("y".to_string(), Column::Numeric(vec![0.0; 5])),
    ];
    TimeFrame::new((0..5).collect(), cols, "y", 1).unwrap()
}

fn rows(f: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..5).map(f).collect()
}

/// Program sources paired with their expected output on [`fixture_frame`].
pub fn cases() -> Vec<(String, Vec<f64>)> {
    let (x, z) = (X, Z);
    let std3 = |a: f64, b: f64, c: f64| {
        let m = (a + b + c) / 3.0;
        (((a - m) * (a - m) + (b - m) * (b - m) + (c - m) * (c - m)) / 2.0).sqrt()
    };
    let cases: Vec<(&str, Vec<f64>)> = vec![
        ("x + z", rows(|i| x[i] + z[i])),
        ("x - z", rows(|i| x[i] - z[i])),
        ("x * z", rows(|i| x[i] * z[i])),
        ("x / z", vec![x[0] / z[0], x[1] / z[1], N, N, x[4] / z[4]]),
        ("x > z", vec![0.0, 0.0, 1.0, N, 0.0]),
        ("x <= z", vec![1.0, 1.0, 0.0, N, 1.0]),
        ("-x", vec![-1.0, 2.0, -4.0, N, -3.0]),
        ("abs(x)", vec![1.0, 2.0, 4.0, N, 3.0]),
        ("log(z)", vec![z[0].ln(), z[1].ln(), N, 0.0, z[4].ln()]),
        ("sqrt(x)", vec![1.0, N, 2.0, N, x[4].sqrt()]),
        ("exp(z)", rows(|i| z[i].exp())),
        ("min(x, z)", vec![1.0, -2.0, 0.0, N, 3.0]),
        ("max(x, z)", vec![2.0, 2.0, 4.0, N, 5.0]),
        ("lag(x, 1)", vec![N, 1.0, -2.0, 4.0, N]),
        ("lag(x, 2, by=g)", vec![N, N, N, N, 1.0]),
        ("diff(x, 1)", vec![N, -3.0, 6.0, N, N]),
        ("diff(z, 1, by=g)", vec![N, N, -2.0, -1.0, 5.0]),
        (
            "rolling_mean(z, 2)",
            vec![
                N,
                (z[0] + z[1]) / 2.0,
                (z[1] + z[2]) / 2.0,
                (z[2] + z[3]) / 2.0,
                (z[3] + z[4]) / 2.0,
            ],
        ),
        ("rolling_sum(x, 3)", vec![N, N, x[0] + x[1] + x[2], N, N]),
        ("rolling_min(z, 3)", vec![N, N, 0.0, 0.0, 0.0]),
        ("rolling_max(z, 2, by=g)", vec![N, N, 2.0, 2.0, 5.0]),
        (
            "rolling_std(z, 3)",
            vec![
                N,
                N,
                std3(z[0], z[1], z[2]),
                std3(z[1], z[2], z[3]),
                std3(z[2], z[3], z[4]),
            ],
        ),
        ("cumsum(x)", vec![1.0, -1.0, 3.0, N, 6.0]),
        ("onehot(g, \"a\")", vec![1.0, 0.0, 1.0, 0.0, 1.0]),
        (
            "let a = x * 2\nlet b = lag(a, 1)\nfeature \"f\": b + z > 3",
            vec![N, 1.0, 0.0, 1.0, N],
        ),
    ];
    cases
        .into_iter()
        .map(|(src, expected)| {
            let src = if src.starts_with("let") {
                src.to_string()
            } else {
                format!("feature \"f\": {src}")
            };
            (src, expected)
        })
        .collect()
}

/// Runs every fixture and returns the first mismatch.
pub fn check_fixtures() -> Result<usize, String> {
    let frame = fixture_frame();
    let cases = cases();
    for (src, expected) in &cases {
        let program = DslProgram::parse(src).map_err(|e| format!("{src}: {e}"))?;
        validate(&program, &frame.schema()).map_err(|e| format!("{src}: {e}"))?;
        let got = execute(&program, &frame).map_err(|e| format!("{src}: {e}"))?;
        if !bits_equal(&got, expected) {
            return Err(format!("{src}: got {got:?}, expected {expected:?}"));
        }
    }
    Ok(cases.len())
}
