use super::ast::{Arg, DslProgram, Expr};

const PREC_UNARY: u8 = 4;
const PREC_PRIMARY: u8 = 5;

/// Canonical source text: one statement per line, comments on their own
/// lines, minimal parentheses.
pub fn format(program: &DslProgram) -> String {
    let mut out = String::new();
    for b in &program.bindings {
        push_comments(&mut out, &b.comments);
        out.push_str("let ");
        out.push_str(&ident(&b.name));
        out.push_str(" = ");
        out.push_str(&format_expr(&b.expr));
        out.push('\n');
    }
    push_comments(&mut out, &program.feature_comments);
    out.push_str("feature ");
    out.push_str(&string_literal(&program.feature_name));
    out.push_str(": ");
    out.push_str(&format_expr(&program.feature_expr));
    out.push('\n');
    push_comments(&mut out, &program.trailing_comments);
    out
}

fn push_comments(out: &mut String, comments: &[String]) {
    for c in comments {
        if c.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
    }
}

pub fn format_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op, .. } => op.precedence(),
        Expr::Neg(_) => PREC_UNARY,
        _ => PREC_PRIMARY,
    }
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    let prec = precedence(e);
    let paren = prec < min_prec;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Ref { name, .. } => out.push_str(&ident(name)),
        Expr::Const(v) => out.push_str(&format!("{v}")),
        Expr::Neg(inner) => {
            out.push('-');
            write_expr(out, inner, PREC_UNARY);
        }
        Expr::Binary { op, lhs, rhs } => {
            // comparisons do not chain, so both sides must bind tighter
            let lhs_min = if op.is_comparison() { prec + 1 } else { prec };
            write_expr(out, lhs, lhs_min);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, rhs, prec + 1);
        }
        Expr::Call(c) => {
            out.push_str(&c.func);
            out.push('(');
            for (i, a) in c.args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                match a {
                    Arg::Expr(e) => write_expr(out, e, 0),
                    Arg::Str(s) => out.push_str(&string_literal(s)),
                }
            }
            if let Some(g) = &c.by {
                if !c.args.is_empty() {
                    out.push_str(", ");
                }
                out.push_str("by=");
                out.push_str(&ident(g));
            }
            out.push(')');
        }
    }
    if paren {
        out.push(')');
    }
}

/// Identifiers that are not plain words (or collide with keywords) are backtick-quoted.
pub(crate) fn ident(name: &str) -> String {
    let mut chars = name.chars();
    let plain = matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
        && name != "let"
        && name != "feature";
    if plain {
        name.to_string()
    } else {
        format!("`{name}`")
    }
}

fn string_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}
