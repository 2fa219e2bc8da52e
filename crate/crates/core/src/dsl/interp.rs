use std::collections::HashMap;

use super::ast::{Arg, BinOp, Call, DslProgram, Expr, Func};
use super::ExecError;
use crate::data::TimeFrame;

/// Runs a program over `frame`, returning one value per row.
///
/// Every operation is trailing: the value at row t depends only on rows
/// `..=t` (within its group when `by=` is given). Numeric faults (division
/// by zero, log of non-positive values, overflow) yield NaN rather than errors.
pub fn execute(program: &DslProgram, frame: &TimeFrame) -> Result<Vec<f64>, ExecError> {
    let mut env: HashMap<&str, Vec<f64>> = HashMap::new();
    for b in &program.bindings {
        let v = eval(&b.expr, frame, &env)?;
        env.insert(&b.name, v);
    }
    eval(&program.feature_expr, frame, &env)
}

fn clean(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::NAN
    }
}

fn eval(e: &Expr, frame: &TimeFrame, env: &HashMap<&str, Vec<f64>>) -> Result<Vec<f64>, ExecError> {
    let m = frame.len();
    match e {
        Expr::Ref { name, .. } => {
            if let Some(v) = env.get(name.as_str()) {
                return Ok(v.clone());
            }
            match frame.column(name) {
                Some(c) => c
                    .as_numeric()
                    .map(|v| v.iter().map(|&x| clean(x)).collect())
                    .ok_or_else(|| ExecError::KindMismatch(name.clone())),
                None => Err(ExecError::MissingColumn(name.clone())),
            }
        }
        Expr::Const(c) => Ok(vec![*c; m]),
        Expr::Neg(inner) => Ok(eval(inner, frame, env)?.into_iter().map(|x| -x).collect()),
        Expr::Binary { op, lhs, rhs } => {
            let a = eval(lhs, frame, env)?;
            let b = eval(rhs, frame, env)?;
            Ok(a.iter().zip(&b).map(|(&x, &y)| binary(*op, x, y)).collect())
        }
        Expr::Call(call) => eval_call(call, frame, env),
    }
}

fn binary(op: BinOp, x: f64, y: f64) -> f64 {
    if x.is_nan() || y.is_nan() {
        return f64::NAN;
    }
    let indicator = |b: bool| if b { 1.0 } else { 0.0 };
    match op {
        BinOp::Add => clean(x + y),
        BinOp::Sub => clean(x - y),
        BinOp::Mul => clean(x * y),
        BinOp::Div => {
            if y == 0.0 {
                f64::NAN
            } else {
                clean(x / y)
            }
        }
        BinOp::Gt => indicator(x > y),
        BinOp::Lt => indicator(x < y),
        BinOp::Ge => indicator(x >= y),
        BinOp::Le => indicator(x <= y),
    }
}

fn eval_call(
    call: &Call,
    frame: &TimeFrame,
    env: &HashMap<&str, Vec<f64>>,
) -> Result<Vec<f64>, ExecError> {
    let func =
        Func::from_name(&call.func).ok_or_else(|| ExecError::UnknownFunction(call.func.clone()))?;
    let series = |i: usize| -> Result<Vec<f64>, ExecError> {
        match call.args.get(i) {
            Some(Arg::Expr(e)) => eval(e, frame, env),
            _ => Err(ExecError::BadArgument(call.func.clone())),
        }
    };
    let window = || -> Result<usize, ExecError> {
        match call.args.get(1) {
            Some(Arg::Expr(Expr::Const(v))) if *v >= 1.0 && v.fract() == 0.0 => Ok(*v as usize),
            _ => Err(ExecError::BadArgument(call.func.clone())),
        }
    };
    let unary = |f: fn(f64) -> f64| -> Result<Vec<f64>, ExecError> {
        Ok(series(0)?.into_iter().map(f).collect())
    };

    match func {
        Func::Abs => unary(f64::abs),
        Func::Log => unary(|x| if x > 0.0 { x.ln() } else { f64::NAN }),
        Func::Sqrt => unary(|x| if x >= 0.0 { x.sqrt() } else { f64::NAN }),
        Func::Exp => unary(|x| clean(x.exp())),
        Func::Min | Func::Max => {
            let a = series(0)?;
            let b = series(1)?;
            let pick = if func == Func::Min {
                f64::min
            } else {
                f64::max
            };
            Ok(a.iter()
                .zip(&b)
                .map(|(&x, &y)| {
                    if x.is_nan() || y.is_nan() {
                        f64::NAN
                    } else {
                        pick(x, y)
                    }
                })
                .collect())
        }
        Func::Onehot => {
            let col = match call.args.first() {
                Some(Arg::Expr(Expr::Ref { name, .. })) => name,
                _ => return Err(ExecError::BadArgument(call.func.clone())),
            };
            let level = match call.args.get(1) {
                Some(Arg::Str(s)) => s,
                _ => return Err(ExecError::BadArgument(call.func.clone())),
            };
            let cats = categorical(frame, col)?;
            Ok(cats
                .iter()
                .map(|c| if c == level { 1.0 } else { 0.0 })
                .collect())
        }
        Func::Cumsum => grouped(frame, call.by.as_deref(), &series(0)?, cumsum),
        Func::Lag => {
            let k = window()?;
            grouped(frame, call.by.as_deref(), &series(0)?, |v| lag(v, k))
        }
        Func::Diff => {
            let k = window()?;
            grouped(frame, call.by.as_deref(), &series(0)?, |v| {
                lag(v, k)
                    .iter()
                    .zip(v)
                    .map(|(&p, &x)| binary(BinOp::Sub, x, p))
                    .collect()
            })
        }
        Func::RollingMean
        | Func::RollingSum
        | Func::RollingMin
        | Func::RollingMax
        | Func::RollingStd => {
            let w = window()?;
            grouped(frame, call.by.as_deref(), &series(0)?, |v| {
                rolling(v, w, func)
            })
        }
    }
}

fn categorical<'a>(frame: &'a TimeFrame, name: &str) -> Result<&'a [String], ExecError> {
    match frame.column(name) {
        Some(c) => c
            .as_categorical()
            .ok_or_else(|| ExecError::KindMismatch(name.to_string())),
        None => Err(ExecError::MissingColumn(name.to_string())),
    }
}

/// Applies a sequence transform to each group's rows in time order.
fn grouped(
    frame: &TimeFrame,
    by: Option<&str>,
    values: &[f64],
    f: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<Vec<f64>, ExecError> {
    let Some(by) = by else {
        return Ok(f(values));
    };
    let keys = categorical(frame, by)?;
    let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, k) in keys.iter().enumerate() {
        groups.entry(k.as_str()).or_default().push(i);
    }
    let mut out = vec![f64::NAN; values.len()];
    for rows in groups.values() {
        let seq: Vec<f64> = rows.iter().map(|&i| values[i]).collect();
        for (&i, v) in rows.iter().zip(f(&seq)) {
            out[i] = v;
        }
    }
    Ok(out)
}

fn lag(v: &[f64], k: usize) -> Vec<f64> {
    (0..v.len())
        .map(|i| if i >= k { v[i - k] } else { f64::NAN })
        .collect()
}

fn cumsum(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    v.iter()
        .map(|&x| {
            if x.is_nan() {
                f64::NAN
            } else {
                acc += x;
                clean(acc)
            }
        })
        .collect()
}

/// Trailing window statistics; NaN until `w` observations are available and
/// whenever the window holds a NaN.
fn rolling(v: &[f64], w: usize, func: Func) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            if i + 1 < w {
                return f64::NAN;
            }
            let win = &v[i + 1 - w..=i];
            if win.iter().any(|x| x.is_nan()) {
                return f64::NAN;
            }
            let sum: f64 = win.iter().sum();
            let out = match func {
                Func::RollingSum => sum,
                Func::RollingMean => sum / w as f64,
                Func::RollingMin => win.iter().copied().fold(f64::INFINITY, f64::min),
                Func::RollingMax => win.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Func::RollingStd => {
                    if w < 2 {
                        return f64::NAN;
                    }
                    let mean = sum / w as f64;
                    let ss: f64 = win.iter().map(|x| (x - mean).powi(2)).sum();
                    (ss / (w - 1) as f64).sqrt()
                }
                _ => unreachable!("not a rolling function"),
            };
            clean(out)
        })
        .collect()
}
