use super::ast::Pos;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Let,
    Feature,
    /// `quoted` is true for backtick identifiers, which are never keywords.
    Ident {
        name: String,
        quoted: bool,
    },
    Number(f64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Assign,
    Semi,
    Plus,
    Minus,
    Star,
    Slash,
    Gt,
    Lt,
    Ge,
    Le,
    Comment(String),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Let => "`let`".into(),
            Tok::Feature => "`feature`".into(),
            Tok::Ident { name, .. } => format!("identifier `{name}`"),
            Tok::Number(v) => format!("number {v}"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Assign => "`=`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Comment(_) => "comment".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            let start = i + 1;
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            out.push((Tok::Comment(text.trim().to_string()), pos));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while i < j {
                        bump!();
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value: f64 = text
                .parse()
                .map_err(|_| ParseError::syntax(pos, format!("bad number `{text}`")))?;
            if !value.is_finite() {
                return Err(ParseError::syntax(
                    pos,
                    format!("number `{text}` out of range"),
                ));
            }
            out.push((Tok::Number(value), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "let" => Tok::Let,
                "feature" => Tok::Feature,
                _ => Tok::Ident {
                    name: word,
                    quoted: false,
                },
            };
            out.push((tok, pos));
            continue;
        }
        if c == '`' {
            bump!();
            let start = i;
            while i < chars.len() && chars[i] != '`' && chars[i] != '\n' {
                bump!();
            }
            if i >= chars.len() || chars[i] != '`' {
                return Err(ParseError::syntax(pos, "unterminated quoted identifier"));
            }
            let name: String = chars[start..i].iter().collect();
            bump!();
            if name.is_empty() {
                return Err(ParseError::syntax(pos, "empty quoted identifier"));
            }
            out.push((Tok::Ident { name, quoted: true }, pos));
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                if i >= chars.len() || chars[i] == '\n' {
                    return Err(ParseError::UnterminatedString {
                        line: pos.line,
                        col: pos.col,
                    });
                }
                match chars[i] {
                    '"' => {
                        bump!();
                        break;
                    }
                    '\\' => {
                        bump!();
                        if i >= chars.len() {
                            return Err(ParseError::UnterminatedString {
                                line: pos.line,
                                col: pos.col,
                            });
                        }
                        let esc = match chars[i] {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        };
                        s.push(esc);
                        bump!();
                    }
                    other => {
                        s.push(other);
                        bump!();
                    }
                }
            }
            out.push((Tok::Str(s), pos));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('>', Some('=')) => (Tok::Ge, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('≥', _) => (Tok::Ge, 1),
            ('≤', _) => (Tok::Le, 1),
            ('>', _) => (Tok::Gt, 1),
            ('<', _) => (Tok::Lt, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            (':', _) => (Tok::Colon, 1),
            ('=', _) => (Tok::Assign, 1),
            (';', _) => (Tok::Semi, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-' | '−', _) => (Tok::Minus, 1),
            ('*' | '×', _) => (Tok::Star, 1),
            ('/' | '÷', _) => (Tok::Slash, 1),
            _ => {
                return Err(ParseError::syntax(
                    pos,
                    format!("unexpected character `{c}`"),
                ))
            }
        };
        for _ in 0..width {
            bump!();
        }
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}
