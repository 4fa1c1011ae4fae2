//! Printing surface trees back to parseable text.

use std::fmt;

use super::parser::{SExpr, SKind, SParam, STy};
use crate::syntax::{write_str_lit, Prim};

fn sep<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T], by: &str) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(by)?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for STy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            STy::Refine(p) => write!(f, "{{v | {p}}}"),
            STy::Name(n, _) => f.write_str(n),
            STy::Marked(a) => write!(f, "*{a}"),
            STy::Arrow(x, a, b) => {
                f.write_str("(")?;
                if let Some(x) = x {
                    write!(f, "{x}: ")?;
                }
                write!(f, "{a} -> {b})")
            }
            STy::Ctor(c, args) => {
                write!(f, "{c}[")?;
                sep(f, args, ", ")?;
                f.write_str("]")
            }
            STy::Forall(vars, body) => write!(f, "(forall {}. {body})", vars.join(", ")),
        }
    }
}

impl fmt::Display for SParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SParam::Var(x, None, _) => f.write_str(x),
            SParam::Var(x, Some(t), _) => write!(f, "({x} :: {t})"),
            SParam::TyVar(a) => write!(f, "[{a}]"),
        }
    }
}

fn prim(f: &mut fmt::Formatter<'_>, p: Prim) -> fmt::Result {
    match p {
        Prim::Plus | Prim::Minus | Prim::Eq => write!(f, "({})", p.name()),
        _ => f.write_str(p.name()),
    }
}

/// Fully parenthesized, so printing then parsing gives back the same tree.
impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SKind::Var(x) => f.write_str(x),
            SKind::Int(n) if *n < 0 => write!(f, "({n})"),
            SKind::Int(n) => write!(f, "{n}"),
            SKind::Str(s) => write_str_lit(f, s),
            SKind::Bool(b) => write!(f, "{b}"),
            SKind::Null => f.write_str("null"),
            SKind::Prim(p) => prim(f, *p),
            SKind::Dict(entries) => {
                f.write_str("{")?;
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_str_lit(f, k)?;
                    write!(f, ": {v}")?;
                }
                f.write_str("}")
            }
            SKind::Fun(params, body) => {
                f.write_str("(fun ")?;
                sep(f, params, " ")?;
                write!(f, " -> {body})")
            }
            SKind::App(a, b) => write!(f, "({a} {b})"),
            SKind::TApp(e, t) => write!(f, "({e} [{t}])"),
            SKind::Get(e, k) => write!(f, "({e}[{k}])"),
            SKind::Binop(p, a, b) => write!(f, "({a} {} {b})", p.name()),
            SKind::If(c, t, e) => write!(f, "(if {c} then {t} else {e})"),
            SKind::Let { recursive, name, params, ann, rhs, body } => {
                f.write_str("(let ")?;
                if *recursive {
                    f.write_str("rec ")?;
                }
                f.write_str(name)?;
                for p in params {
                    write!(f, " {p}")?;
                }
                if let Some(t) = ann {
                    write!(f, " :: {t}")?;
                }
                write!(f, " = {rhs} in {body})")
            }
            SKind::New(c, targs, args) => {
                write!(f, "new {c}")?;
                if let Some(ts) = targs {
                    f.write_str("[")?;
                    sep(f, ts, ", ")?;
                    f.write_str("]")?;
                }
                f.write_str("(")?;
                sep(f, args, ", ")?;
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;

    fn round(s: &str) -> String {
        parse(s).unwrap().body.to_string()
    }

    #[test]
    fn printing_reparses() {
        let src = "let f (x :: Int) :: Int = x + -1 in if f 3 = 2 then {\"a\": f} else t[\"a\"]";
        let once = round(src);
        assert_eq!(round(&once), once);
        assert_eq!(once, "(let f (x :: Int) :: Int = (x + (-1)) in (if ((f 3) = 2) then {\"a\": f} else (t[\"a\"])))");
    }
}
