//! Random well-formed feature programs over a fixed toy schema.

use elate_core::data::{Column, TimeFrame};
use elate_core::dsl::{Arg, BinOp, Binding, DslProgram, Expr, Func, Pos};
use rand::Rng;

pub const NUMERIC: [&str; 3] = ["x1", "x-2", "x3"];
pub const GROUP: &str = "g";
pub const LEVELS: [&str; 3] = ["a", "b", "c d"];

const OPS: [BinOp; 8] = [
    BinOp::Add,
    BinOp::Sub,
    BinOp::Mul,
    BinOp::Div,
    BinOp::Gt,
    BinOp::Lt,
    BinOp::Ge,
    BinOp::Le,
];

const NAMES: [&str; 5] = ["f", "trend 7d", "ratio \"q\"", "back\\slash", "tab\there"];
const WORDS: [&str; 6] = ["level", "spread", "of x1", "weekly", "smoothed #2", "ratio"];

pub struct Generator {
    /// Every order-dependent call groups by [`GROUP`].
    pub force_by: bool,
    pub max_depth: usize,
}

impl Generator {
    pub fn program<R: Rng>(&self, rng: &mut R) -> DslProgram {
        let n_bind = rng.random_range(0..4);
        let mut scope: Vec<String> = Vec::new();
        let mut bindings = Vec::new();
        for i in 0..n_bind {
            let expr = self.expr(rng, &scope, self.max_depth);
            let name = if rng.random_bool(0.2) {
                format!("tmp {i}")
            } else {
                format!("b{i}")
            };
            bindings.push(Binding {
                comments: self.comments(rng),
                name: name.clone(),
                expr,
                pos: Pos::default(),
            });
            scope.push(name);
        }
        let expr = self.expr(rng, &scope, self.max_depth);
        let mut p = DslProgram::new(bindings, NAMES[rng.random_range(0..NAMES.len())], expr);
        p.feature_comments = self.comments(rng);
        p.trailing_comments = self.comments(rng);
        p
    }

    fn comments<R: Rng>(&self, rng: &mut R) -> Vec<String> {
        (0..rng.random_range(0..3))
            .map(|_| {
                if rng.random_bool(0.1) {
                    String::new()
                } else {
                    (0..rng.random_range(1..4))
                        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
                        .collect::<Vec<_>>()
                        .join(" ")
                }
            })
            .collect()
    }

    fn constant<R: Rng>(&self, rng: &mut R) -> f64 {
        match rng.random_range(0..4) {
            0 => rng.random_range(0..20) as f64,
            1 => rng.random_range(0.0..1000.0),
            2 => rng.random_range(0.0..1e-3),
            _ => [0.5, 0.1, 2.25, 1e6][rng.random_range(0..4)],
        }
    }

    fn leaf<R: Rng>(&self, rng: &mut R, scope: &[String]) -> Expr {
        if rng.random_bool(0.25) {
            return Expr::Const(self.constant(rng));
        }
        if !scope.is_empty() && rng.random_bool(0.4) {
            return Expr::reference(scope[rng.random_range(0..scope.len())].clone());
        }
        Expr::reference(NUMERIC[rng.random_range(0..NUMERIC.len())])
    }

    pub fn expr<R: Rng>(&self, rng: &mut R, scope: &[String], depth: usize) -> Expr {
        if depth == 0 || rng.random_bool(0.25) {
            return self.leaf(rng, scope);
        }
        match rng.random_range(0..6) {
            0 | 1 => Expr::binary(
                OPS[rng.random_range(0..OPS.len())],
                self.expr(rng, scope, depth - 1),
                self.expr(rng, scope, depth - 1),
            ),
            2 => Expr::Neg(Box::new(self.expr(rng, scope, depth - 1))),
            _ => self.call(rng, scope, depth),
        }
    }

    fn call<R: Rng>(&self, rng: &mut R, scope: &[String], depth: usize) -> Expr {
        let func = Func::ALL[rng.random_range(0..Func::ALL.len())];
        let mut args = Vec::new();
        if func == Func::Onehot {
            args.push(Arg::Expr(Expr::reference(GROUP)));
            args.push(Arg::Str(
                LEVELS[rng.random_range(0..LEVELS.len())].to_string(),
            ));
            return Expr::call(func.name(), args, None);
        }
        let n_series = match func {
            Func::Min | Func::Max => 2,
            _ => 1,
        };
        for _ in 0..n_series {
            args.push(Arg::Expr(self.expr(rng, scope, depth - 1)));
        }
        if func.signature().len() == 2 && n_series == 1 {
            args.push(Arg::Expr(Expr::Const(rng.random_range(1..8) as f64)));
        }
        let by = (func.accepts_by() && (self.force_by || rng.random_bool(0.3)))
            .then(|| GROUP.to_string());
        Expr::call(func.name(), args, by)
    }
}

/// Frame over the fuzz schema with `n` rows, a few NaNs, zeros and negatives.
pub fn fuzz_frame<R: Rng>(rng: &mut R, n: usize) -> TimeFrame {
    let mut cols = Vec::new();
    for name in NUMERIC {
        let v: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..12) {
                0 => f64::NAN,
                1 => 0.0,
                _ => rng.random_range(-5.0..5.0),
            })
            .collect();
        cols.push((name.to_string(), Column::Numeric(v)));
    }
    let g: Vec<String> = (0..n)
        .map(|_| LEVELS[rng.random_range(0..LEVELS.len())].to_string())
        .collect();
    cols.push((GROUP.to_string(), Column::Categorical(g)));
    cols.push((
        "y".to_string(),
        Column::Numeric((0..n).map(|i| i as f64).collect()),
    ));
    TimeFrame::new((0..n as i64).collect(), cols, "y", 1).unwrap()
}

/// Copy of `frame` with every numeric value after `row` replaced by fresh noise.
pub fn perturb_after<R: Rng>(frame: &TimeFrame, row: usize, rng: &mut R) -> TimeFrame {
    perturb_rows(frame, |i| i > row, rng)
}

pub fn perturb_rows<R: Rng>(
    frame: &TimeFrame,
    pick: impl Fn(usize) -> bool,
    rng: &mut R,
) -> TimeFrame {
    let cols = frame
        .columns()
        .map(|(name, col)| {
            let col = match col {
                Column::Numeric(v) if name != "y" => Column::Numeric(
                    v.iter()
                        .enumerate()
                        .map(|(i, &x)| {
                            if pick(i) {
                                rng.random_range(-50.0..50.0)
                            } else {
                                x
                            }
                        })
                        .collect(),
                ),
                other => other.clone(),
            };
            (name.to_string(), col)
        })
        .collect();
    TimeFrame::new(frame.timestamps().to_vec(), cols, "y", 1).unwrap()
}

pub fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
}
