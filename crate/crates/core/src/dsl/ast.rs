use std::fmt;

/// Source location (1-based). Positions never take part in structural equality.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Gt,
    Lt,
    Ge,
    Le,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Gt => ">",
            BinOp::Lt => "<",
            BinOp::Ge => ">=",
            BinOp::Le => "<=",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Gt | BinOp::Lt | BinOp::Ge | BinOp::Le => 1,
            BinOp::Add | BinOp::Sub => 2,
            BinOp::Mul | BinOp::Div => 3,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 1
    }
}

/// What a call argument position accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgKind {
    /// Any numeric expression.
    Series,
    /// Positive integer literal (window length, lag, diff period).
    Window,
    /// Name of a categorical column.
    Category,
    /// String literal naming a categorical level.
    Level,
}

/// The closed set of callable functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Lag,
    Diff,
    RollingMean,
    RollingSum,
    RollingMin,
    RollingMax,
    RollingStd,
    Cumsum,
    Abs,
    Log,
    Sqrt,
    Exp,
    Min,
    Max,
    Onehot,
}

impl Func {
    pub const ALL: [Func; 15] = [
        Func::Lag,
        Func::Diff,
        Func::RollingMean,
        Func::RollingSum,
        Func::RollingMin,
        Func::RollingMax,
        Func::RollingStd,
        Func::Cumsum,
        Func::Abs,
        Func::Log,
        Func::Sqrt,
        Func::Exp,
        Func::Min,
        Func::Max,
        Func::Onehot,
    ];

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Lag => "lag",
            Func::Diff => "diff",
            Func::RollingMean => "rolling_mean",
            Func::RollingSum => "rolling_sum",
            Func::RollingMin => "rolling_min",
            Func::RollingMax => "rolling_max",
            Func::RollingStd => "rolling_std",
            Func::Cumsum => "cumsum",
            Func::Abs => "abs",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Min => "min",
            Func::Max => "max",
            Func::Onehot => "onehot",
        }
    }

    pub fn signature(self) -> &'static [ArgKind] {
        use ArgKind::*;
        match self {
            Func::Lag
            | Func::Diff
            | Func::RollingMean
            | Func::RollingSum
            | Func::RollingMin
            | Func::RollingMax
            | Func::RollingStd => &[Series, Window],
            Func::Cumsum | Func::Abs | Func::Log | Func::Sqrt | Func::Exp => &[Series],
            Func::Min | Func::Max => &[Series, Series],
            Func::Onehot => &[Category, Level],
        }
    }

    /// Whether the function is order-dependent and so takes `by=`.
    pub fn accepts_by(self) -> bool {
        matches!(
            self,
            Func::Lag
                | Func::Diff
                | Func::RollingMean
                | Func::RollingSum
                | Func::RollingMin
                | Func::RollingMax
                | Func::RollingStd
                | Func::Cumsum
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Expr(Expr),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    /// Function name as written; resolved against [`Func`] during validation.
    pub func: String,
    pub args: Vec<Arg>,
    /// Categorical column to group by.
    pub by: Option<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// A base column, or an earlier `let` binding.
    Ref {
        name: String,
        pos: Pos,
    },
    /// Non-negative finite literal; negation is always [`Expr::Neg`].
    Const(f64),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Neg(Box<Expr>),
    Call(Call),
}

impl Expr {
    pub fn reference(name: impl Into<String>) -> Expr {
        Expr::Ref {
            name: name.into(),
            pos: Pos::default(),
        }
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn call(func: impl Into<String>, args: Vec<Arg>, by: Option<String>) -> Expr {
        Expr::Call(Call {
            func: func.into(),
            args,
            by,
            pos: Pos::default(),
        })
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Ref { .. } | Expr::Const(_) => 1,
            Expr::Binary { lhs, rhs, .. } => 1 + lhs.size() + rhs.size(),
            Expr::Neg(e) => 1 + e.size(),
            Expr::Call(c) => {
                1 + c
                    .args
                    .iter()
                    .map(|a| match a {
                        Arg::Expr(e) => e.size(),
                        Arg::Str(_) => 1,
                    })
                    .sum::<usize>()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    /// Comment lines (without `#`) immediately preceding the binding.
    pub comments: Vec<String>,
    pub name: String,
    pub expr: Expr,
    pub pos: Pos,
}

/// A parsed feature program: `let` bindings followed by one `feature` declaration.
#[derive(Debug, Clone)]
pub struct DslProgram {
    pub bindings: Vec<Binding>,
    pub feature_comments: Vec<String>,
    pub feature_name: String,
    pub feature_expr: Expr,
    pub trailing_comments: Vec<String>,
    pub(crate) source: String,
}

impl PartialEq for DslProgram {
    fn eq(&self, other: &Self) -> bool {
        self.bindings == other.bindings
            && self.feature_comments == other.feature_comments
            && self.feature_name == other.feature_name
            && self.feature_expr == other.feature_expr
            && self.trailing_comments == other.trailing_comments
    }
}

impl DslProgram {
    /// Builds a program from parts; its source text is the canonical formatting.
    pub fn new(
        bindings: Vec<Binding>,
        feature_name: impl Into<String>,
        feature_expr: Expr,
    ) -> Self {
        let mut p = DslProgram {
            bindings,
            feature_comments: Vec::new(),
            feature_name: feature_name.into(),
            feature_expr,
            trailing_comments: Vec::new(),
            source: String::new(),
        };
        p.source = super::format(&p);
        p
    }

    pub fn name(&self) -> &str {
        &self.feature_name
    }

    /// The original source text this program was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// The first comment in the program, taken as its one-line utility description.
    pub fn comment(&self) -> Option<&str> {
        self.bindings
            .iter()
            .flat_map(|b| b.comments.iter())
            .chain(self.feature_comments.iter())
            .chain(self.trailing_comments.iter())
            .next()
            .map(String::as_str)
    }
}
