use std::collections::HashSet;

use super::ast::{Arg, ArgKind, DslProgram, Expr, Func};
use super::ValidationError;
use crate::data::{ColumnKind, Schema};

/// Largest accepted window / lag / period.
pub const MAX_WINDOW: f64 = 100_000.0;

/// Checks a parsed program against a frame schema.
pub fn validate(program: &DslProgram, schema: &Schema) -> Result<(), ValidationError> {
    if schema.contains(&program.feature_name) {
        return Err(ValidationError::NameCollision(program.feature_name.clone()));
    }
    let mut scope: HashSet<&str> = HashSet::new();
    for b in &program.bindings {
        check_expr(&b.expr, schema, &scope)?;
        if schema.contains(&b.name) || !scope.insert(&b.name) {
            return Err(ValidationError::NameCollision(b.name.clone()));
        }
    }
    check_expr(&program.feature_expr, schema, &scope)
}

fn check_expr(e: &Expr, schema: &Schema, scope: &HashSet<&str>) -> Result<(), ValidationError> {
    match e {
        Expr::Ref { name, .. } => {
            if scope.contains(name.as_str()) {
                return Ok(());
            }
            match schema.kind_of(name) {
                Some(ColumnKind::Numeric) => Ok(()),
                Some(ColumnKind::Categorical) => Err(ValidationError::KindMismatch {
                    name: name.clone(),
                    detail: "categorical column used as a numeric value".into(),
                }),
                None => Err(ValidationError::UnknownColumn(name.clone())),
            }
        }
        Expr::Const(_) => Ok(()),
        Expr::Neg(inner) => check_expr(inner, schema, scope),
        Expr::Binary { lhs, rhs, .. } => {
            check_expr(lhs, schema, scope)?;
            check_expr(rhs, schema, scope)
        }
        Expr::Call(call) => {
            let func = Func::from_name(&call.func)
                .ok_or_else(|| ValidationError::UnknownFunction(call.func.clone()))?;
            let sig = func.signature();
            if sig.len() != call.args.len() {
                return Err(ValidationError::KindMismatch {
                    name: call.func.clone(),
                    detail: format!("expects {} argument(s)", sig.len()),
                });
            }
            for (kind, arg) in sig.iter().zip(&call.args) {
                check_arg(func, *kind, arg, schema, scope)?;
            }
            if let Some(g) = &call.by {
                if !func.accepts_by() {
                    return Err(ValidationError::KindMismatch {
                        name: call.func.clone(),
                        detail: "does not accept by=".into(),
                    });
                }
                match schema.kind_of(g) {
                    Some(ColumnKind::Categorical) => {}
                    Some(ColumnKind::Numeric) => {
                        return Err(ValidationError::KindMismatch {
                            name: g.clone(),
                            detail: "by= needs a categorical column".into(),
                        })
                    }
                    None => return Err(ValidationError::UnknownColumn(g.clone())),
                }
            }
            Ok(())
        }
    }
}

fn check_arg(
    func: Func,
    kind: ArgKind,
    arg: &Arg,
    schema: &Schema,
    scope: &HashSet<&str>,
) -> Result<(), ValidationError> {
    let mismatch = |detail: &str| ValidationError::KindMismatch {
        name: func.name().to_string(),
        detail: detail.to_string(),
    };
    match kind {
        ArgKind::Series => match arg {
            Arg::Expr(e) => check_expr(e, schema, scope),
            Arg::Str(_) => Err(mismatch(
                "string literal where a numeric series is expected",
            )),
        },
        ArgKind::Window => match arg {
            Arg::Expr(Expr::Const(v)) if *v >= 1.0 && v.fract() == 0.0 && *v <= MAX_WINDOW => {
                Ok(())
            }
            _ => Err(ValidationError::NonLiteralWindow {
                func: func.name().to_string(),
                detail: "window/lag must be a positive integer literal".into(),
            }),
        },
        ArgKind::Category => match arg {
            Arg::Expr(Expr::Ref { name, .. }) => match schema.kind_of(name) {
                Some(ColumnKind::Categorical) if !scope.contains(name.as_str()) => Ok(()),
                Some(_) => Err(ValidationError::KindMismatch {
                    name: name.clone(),
                    detail: "onehot needs a categorical column".into(),
                }),
                None => Err(ValidationError::UnknownColumn(name.clone())),
            },
            _ => Err(mismatch("first argument must name a categorical column")),
        },
        ArgKind::Level => match arg {
            Arg::Str(_) => Ok(()),
            Arg::Expr(_) => Err(mismatch("second argument must be a string literal level")),
        },
    }
}
