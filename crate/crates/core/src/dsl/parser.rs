use super::ast::{Arg, BinOp, Binding, Call, DslProgram, Expr, Func, Pos};
use super::lexer::{tokenize, Tok};
use super::ParseError;

/// Calls may nest at most this deep; keeps recursion bounded on hostile input.
const MAX_DEPTH: usize = 200;

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    pending_comments: Vec<String>,
    depth: usize,
}

pub fn parse(source: &str) -> Result<DslProgram, ParseError> {
    let toks = tokenize(source)?;
    if toks
        .iter()
        .all(|(t, _)| matches!(t, Tok::Comment(_) | Tok::Eof))
    {
        return Err(ParseError::EmptyProgram);
    }
    let mut p = Parser {
        toks,
        at: 0,
        pending_comments: Vec::new(),
        depth: 0,
    };
    let mut bindings = Vec::new();
    loop {
        let (tok, pos) = p.peek();
        match tok {
            Tok::Let => {
                p.advance();
                let comments = std::mem::take(&mut p.pending_comments);
                let name = p.ident("binding name")?;
                p.expect(Tok::Assign)?;
                let expr = p.expr()?;
                p.eat(&Tok::Semi);
                bindings.push(Binding {
                    comments,
                    name,
                    expr,
                    pos,
                });
            }
            Tok::Feature => {
                p.advance();
                let feature_comments = std::mem::take(&mut p.pending_comments);
                let name_pos = p.peek().1;
                let feature_name = match p.advance() {
                    Tok::Str(s) => s,
                    other => {
                        return Err(ParseError::syntax(
                            name_pos,
                            format!("expected feature name string, found {}", other.describe()),
                        ))
                    }
                };
                if feature_name.trim().is_empty() {
                    return Err(ParseError::syntax(
                        name_pos,
                        "feature name must not be empty",
                    ));
                }
                p.expect(Tok::Colon)?;
                let feature_expr = p.expr()?;
                p.eat(&Tok::Semi);
                let (end, end_pos) = p.peek();
                if end != Tok::Eof {
                    return Err(ParseError::syntax(
                        end_pos,
                        format!(
                            "unexpected {} after the feature declaration",
                            end.describe()
                        ),
                    ));
                }
                let trailing_comments = std::mem::take(&mut p.pending_comments);
                return Ok(DslProgram {
                    bindings,
                    feature_comments,
                    feature_name,
                    feature_expr,
                    trailing_comments,
                    source: source.to_string(),
                });
            }
            other => {
                return Err(ParseError::syntax(
                    pos,
                    format!("expected `let` or `feature`, found {}", other.describe()),
                ))
            }
        }
    }
}

impl Parser {
    /// Next significant token; comments are moved to `pending_comments`.
    fn peek(&mut self) -> (Tok, Pos) {
        while let (Tok::Comment(c), _) = &self.toks[self.at] {
            self.pending_comments.push(c.clone());
            self.at += 1;
        }
        self.toks[self.at].clone()
    }

    fn peek_second(&mut self) -> Tok {
        self.peek();
        self.toks[self.at + 1..]
            .iter()
            .find(|(t, _)| !matches!(t, Tok::Comment(_)))
            .map(|(t, _)| t.clone())
            .unwrap_or(Tok::Eof)
    }

    fn advance(&mut self) -> Tok {
        let (tok, _) = self.peek();
        if tok != Tok::Eof {
            self.at += 1;
        }
        tok
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if &self.peek().0 == want {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let (tok, pos) = self.peek();
        if tok == want {
            self.advance();
            Ok(())
        } else {
            Err(ParseError::syntax(
                pos,
                format!("expected {}, found {}", want.describe(), tok.describe()),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        let (tok, pos) = self.peek();
        match tok {
            Tok::Ident { name, .. } => {
                self.advance();
                Ok(name)
            }
            other => Err(ParseError::syntax(
                pos,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let pos = self.peek().1;
            return Err(ParseError::syntax(pos, "expression nested too deeply"));
        }
        let lhs = self.additive()?;
        let op = match self.peek().0 {
            Tok::Gt => Some(BinOp::Gt),
            Tok::Lt => Some(BinOp::Lt),
            Tok::Ge => Some(BinOp::Ge),
            Tok::Le => Some(BinOp::Le),
            _ => None,
        };
        let out = match op {
            Some(op) => {
                self.advance();
                let rhs = self.additive()?;
                Expr::binary(op, lhs, rhs)
            }
            None => lhs,
        };
        self.depth -= 1;
        Ok(out)
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().0 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().0 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            self.depth += 1;
            if self.depth > MAX_DEPTH {
                let pos = self.peek().1;
                return Err(ParseError::syntax(pos, "expression nested too deeply"));
            }
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (tok, pos) = self.peek();
        match tok {
            Tok::Number(v) => {
                self.advance();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident { name, quoted } => {
                self.advance();
                if !quoted && self.peek().0 == Tok::LParen {
                    self.call(name, pos)
                } else {
                    Ok(Expr::Ref { name, pos })
                }
            }
            other => Err(ParseError::syntax(
                pos,
                format!("expected an expression, found {}", other.describe()),
            )),
        }
    }

    fn call(&mut self, func: String, pos: Pos) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        let mut by = None;
        if !self.eat(&Tok::RParen) {
            loop {
                let (tok, arg_pos) = self.peek();
                let is_by = matches!(&tok, Tok::Ident { name, quoted: false } if name == "by")
                    && self.peek_second() == Tok::Assign;
                if is_by {
                    self.advance();
                    self.advance();
                    if by.is_some() {
                        return Err(ParseError::syntax(arg_pos, "`by=` given twice"));
                    }
                    by = Some(self.ident("grouping column after `by=`")?);
                } else {
                    if by.is_some() {
                        return Err(ParseError::syntax(
                            arg_pos,
                            "`by=` must be the last argument",
                        ));
                    }
                    match tok {
                        Tok::Str(s) => {
                            self.advance();
                            args.push(Arg::Str(s));
                        }
                        _ => args.push(Arg::Expr(self.expr()?)),
                    }
                }
                if self.eat(&Tok::Comma) {
                    continue;
                }
                self.expect(Tok::RParen)?;
                break;
            }
        }
        if let Some(f) = Func::from_name(&func) {
            let want = f.signature().len();
            if args.len() != want {
                return Err(ParseError::syntax(
                    pos,
                    format!("`{func}` takes {want} argument(s), found {}", args.len()),
                ));
            }
            if by.is_some() && !f.accepts_by() {
                return Err(ParseError::syntax(
                    pos,
                    format!("`{func}` does not accept `by=`"),
                ));
            }
        }
        Ok(Expr::Call(Call {
            func,
            args,
            by,
            pos,
        }))
    }
}
