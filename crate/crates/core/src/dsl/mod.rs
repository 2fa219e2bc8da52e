//! The feature-transformation language: a closed grammar of `let` bindings
//! ending in one named `feature` expression.
//!
//! Programs are parsed, checked against a frame schema, and interpreted
//! column-wise. Every operation looks only backwards in time, so a feature
//! value at row t never depends on later rows.

mod ast;
mod format;
mod interp;
mod lexer;
mod parser;
mod validate;


use thiserror::Error;

pub use ast::{Arg, ArgKind, BinOp, Binding, Call, DslProgram, Expr, Func, Pos};
pub use format::{format, format_expr};
pub use interp::execute;
pub use parser::parse;
pub use validate::{validate, MAX_WINDOW};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unterminated string starting at {line}:{col}")]
    UnterminatedString { line: usize, col: usize },
    #[error("program is empty")]
    EmptyProgram,
}

impl ParseError {
    pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("kind mismatch for `{name}`: {detail}")]
    KindMismatch { name: String, detail: String },
    #[error("name `{0}` is already in use")]
    NameCollision(String),
    #[error("bad window in `{func}`: {detail}")]
    NonLiteralWindow { func: String, detail: String },
}

/// Raised only when a program does not fit the frame it runs on.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("column `{0}` is missing from the frame")]
    MissingColumn(String),
    #[error("column `{0}` has the wrong kind")]
    KindMismatch(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("bad arguments to `{0}`")]
    BadArgument(String),
}

/// Any failure turning source text into a feature column.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

impl DslProgram {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        parse(source)
    }
}

/// Grammar reference, shipped in the prompt so proposals stay inside the language.
pub const GRAMMAR: &str = r##"Feature programs use this language (EBNF):

  program  := { "let" ident "=" expr [";"] } "feature" string ":" expr [";"]
  expr     := sum [ ( ">" | "<" | ">=" | "<=" ) sum ]
  sum      := term { ( "+" | "-" ) term }
  term     := unary { ( "*" | "/" ) unary }
  unary    := "-" unary | primary
  primary  := number | ident | call | "(" expr ")"
  call     := fname "(" [ arg { "," arg } ] [ "," "by=" ident ] ")"
  arg      := expr | string
  ident    := letter { letter | digit | "_" } | "`" any text "`"
  comment  := "#" text to end of line

Functions (k and w are positive integer literals; g is a categorical column):
  lag(e, k)            value k steps earlier
  diff(e, k)           e - lag(e, k)
  rolling_mean(e, w)   trailing mean over the last w rows, NaN until w rows exist
  rolling_sum(e, w)    trailing sum
  rolling_min(e, w)    trailing minimum
  rolling_max(e, w)    trailing maximum
  rolling_std(e, w)    trailing sample standard deviation (w = 1 gives NaN)
  cumsum(e)            running sum; NaN inputs add nothing and give NaN at that row
  abs(e) log(e) sqrt(e) exp(e)
  min(a, b) max(a, b)  elementwise
  onehot(g, "level")   1 where g equals level, else 0

lag, diff, rolling_* and cumsum accept a trailing by=g to run separately
within each group of g, in time order. Comparisons yield 1 or 0. Division by
zero, log of non-positive values and sqrt of negative values give NaN, and
NaN propagates through arithmetic. Categorical columns may only appear in
by= or onehot. Start the program with a one-line `#` comment explaining why
the feature should help.

Example:
  # accumulation/distribution oscillator per symbol
  let clv = ((close - low) - (high - close)) / (high - low)
  let adl = cumsum(clv * volume, by=symbol)
  feature "adl_osc": adl - rolling_mean(adl, 3, by=symbol)
"##;
