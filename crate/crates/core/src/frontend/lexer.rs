use std::fmt;

use super::{FrontendError, Pos};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// Identifier starting with a lowercase letter or underscore.
    Ident(String),
    /// Identifier starting with an uppercase letter.
    CIdent(String),
    Int(i64),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::CIdent(s) => write!(f, "{s}"),
            Tok::Int(n) => write!(f, "{n}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Sym(s) => write!(f, "{s}"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const SYMBOLS: [&str; 27] = [
    "<=>", "::", "->", "=>", "/\\", "\\/", "!=", "<=", ">=", "(", ")", "[", "]", "{", "}", ",",
    ":", "=", "<", ">", "+", "-", "*", ".", "|", ";", "@",
];

fn ends_operand(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Ident(_)
            | Tok::CIdent(_)
            | Tok::Int(_)
            | Tok::Str(_)
            | Tok::Sym(")")
            | Tok::Sym("]")
            | Tok::Sym("}")
    )
}

pub fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, FrontendError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out: Vec<(Tok, Pos)> = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
            continue;
        }
        let negative = c == '-'
            && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())
            && !out.last().is_some_and(|(t, _)| ends_operand(t));
        if c.is_ascii_digit() || negative {
            let start = i;
            advance(&mut i, &mut line, &mut col, c);
            while i < chars.len() && chars[i].is_ascii_digit() {
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let n = lit.parse::<i64>().map_err(|_| FrontendError::Parse {
                pos,
                msg: format!("integer literal {lit} out of range"),
                expected: vec![],
            })?;
            out.push((Tok::Int(n), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
            let word: String = chars[start..i].iter().collect();
            if c.is_uppercase() {
                out.push((Tok::CIdent(word), pos));
            } else {
                out.push((Tok::Ident(word), pos));
            }
            continue;
        }
        if c == '"' {
            advance(&mut i, &mut line, &mut col, c);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => {
                        return Err(FrontendError::Parse {
                            pos,
                            msg: "unterminated string literal".into(),
                            expected: vec!["\"".into()],
                        })
                    }
                    Some('"') => {
                        advance(&mut i, &mut line, &mut col, '"');
                        break;
                    }
                    Some('\\') => {
                        advance(&mut i, &mut line, &mut col, '\\');
                        let e = chars.get(i).copied().unwrap_or('\\');
                        s.push(match e {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                        advance(&mut i, &mut line, &mut col, e);
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(&mut i, &mut line, &mut col, ch);
                    }
                }
            }
            out.push((Tok::Str(s), pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                for ch in sym.chars() {
                    advance(&mut i, &mut line, &mut col, ch);
                }
                out.push((Tok::Sym(sym), pos));
            }
            None => {
                return Err(FrontendError::Parse {
                    pos,
                    msg: format!("unexpected character {c:?}"),
                    expected: vec![],
                })
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}
