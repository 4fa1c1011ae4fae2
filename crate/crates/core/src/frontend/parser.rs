use crate::syntax::*;

use super::lexer::{lex, Tok};
use super::{FrontendError, Pos};

/// Surface type syntax before abbreviations are expanded.
#[derive(Clone, Debug, PartialEq)]
pub enum STy {
    Refine(Formula),
    /// An abbreviation (`Int`, `Top`, ...) or a type variable.
    Name(String, Pos),
    Marked(String),
    Arrow(Option<String>, Box<STy>, Box<STy>),
    Ctor(String, Vec<STy>),
    Forall(Vec<String>, Box<STy>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SParam {
    Var(String, Option<STy>, Pos),
    TyVar(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SExpr {
    pub kind: SKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SKind {
    Var(String),
    Int(i64),
    Str(String),
    Bool(bool),
    Null,
    Prim(Prim),
    Dict(Vec<(String, SExpr)>),
    Fun(Vec<SParam>, Box<SExpr>),
    App(Box<SExpr>, Box<SExpr>),
    TApp(Box<SExpr>, STy),
    Get(Box<SExpr>, Box<SExpr>),
    Binop(Prim, Box<SExpr>, Box<SExpr>),
    If(Box<SExpr>, Box<SExpr>, Box<SExpr>),
    Let {
        recursive: bool,
        name: String,
        params: Vec<SParam>,
        ann: Option<STy>,
        rhs: Box<SExpr>,
        body: Box<SExpr>,
    },
    New(String, Option<Vec<STy>>, Vec<SExpr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceProgram {
    pub typedefs: Vec<(DatatypeDef, Pos)>,
    pub body: SExpr,
}

const KEYWORDS: [&str; 14] = [
    "let", "rec", "in", "fun", "if", "then", "else", "new", "type", "forall", "true", "false",
    "null", "not",
];

const ABBREVIATIONS: [&str; 7] = ["Int", "Bool", "Str", "Dict", "Top", "IorB", "Null"];

fn is_reserved(s: &str) -> bool {
    KEYWORDS.contains(&s) || Prim::from_ident(s).is_some() || s == "v"
}

pub struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

type PResult<T> = Result<T, FrontendError>;

impl Parser {
    pub fn new(text: &str) -> PResult<Parser> {
        Ok(Parser {
            toks: lex(text)?,
            i: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }
    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].0
    }
    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }
    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }
    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }
    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }
    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }
    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }
    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(FrontendError::Parse {
            pos: self.pos(),
            msg: format!("unexpected {}", self.peek()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }
    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&[s])
        }
    }
    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.error(&[s])
        }
    }
    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }
    fn cident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::CIdent(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(&["capitalized identifier"]),
        }
    }

    // -- programs ----------------------------------------------------------

    pub fn program(&mut self) -> PResult<SourceProgram> {
        let mut typedefs = Vec::new();
        while self.is_kw("type") {
            let pos = self.pos();
            typedefs.push((self.typedef()?, pos));
        }
        let body = self.expr()?;
        if *self.peek() != Tok::Eof {
            return self.error(&["end of input"]);
        }
        Ok(SourceProgram { typedefs, body })
    }

    fn typedef(&mut self) -> PResult<DatatypeDef> {
        self.expect_kw("type")?;
        let name = self.cident()?;
        self.expect_sym("[")?;
        let mut params = Vec::new();
        if !self.is_sym("]") {
            loop {
                let variance = match self.bump() {
                    Tok::Sym("+") => Variance::Co,
                    Tok::Sym("-") => Variance::Contra,
                    Tok::Sym("=") => Variance::Inv,
                    _ => {
                        self.i -= 1;
                        return self.error(&["+", "-", "="]);
                    }
                };
                let marked = self.eat_sym("*");
                let pname = self.cident()?;
                params.push(TypeParam {
                    variance,
                    name: pname,
                    marked,
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym("]")?;
        self.expect_sym("{")?;
        let mut fields = Vec::new();
        loop {
            let fname = self.ident()?;
            self.expect_sym(":")?;
            let pos = self.pos();
            let t = self.ty()?;
            fields.push((fname, desugar_mono(&t, pos)?));
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("}")?;
        // A marked occurrence in a field marks its parameter.
        for p in params.iter_mut() {
            let mut occ = Vec::new();
            for (_, t) in &fields {
                collect_marked(&t.0, &mut occ);
            }
            if occ.contains(&p.name) {
                p.marked = true;
            }
        }
        Ok(DatatypeDef {
            name,
            params,
            fields,
        })
    }

    // -- types -------------------------------------------------------------

    pub fn ty(&mut self) -> PResult<STy> {
        if self.eat_kw("forall") {
            let mut vars = vec![self.cident()?];
            while self.eat_sym(",") {
                vars.push(self.cident()?);
            }
            self.expect_sym(".")?;
            let body = self.ty()?;
            return Ok(STy::Forall(vars, Box::new(body)));
        }
        self.arrow_ty()
    }

    fn arrow_ty(&mut self) -> PResult<STy> {
        let binder = match (self.peek().clone(), self.peek_at(1)) {
            (Tok::Ident(x), Tok::Sym(":")) if x != "v" => {
                self.bump();
                self.bump();
                Some(x)
            }
            _ => None,
        };
        let dom = self.atom_ty()?;
        if self.eat_sym("->") {
            let cod = self.arrow_ty()?;
            Ok(STy::Arrow(binder, Box::new(dom), Box::new(cod)))
        } else if binder.is_some() {
            self.error(&["->"])
        } else {
            Ok(dom)
        }
    }

    fn atom_ty(&mut self) -> PResult<STy> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Sym("{") => {
                self.bump();
                match self.bump() {
                    Tok::Ident(v) if v == "v" => {}
                    _ => {
                        self.i -= 1;
                        return self.error(&["v"]);
                    }
                }
                self.expect_sym("|")?;
                let p = self.formula()?;
                self.expect_sym("}")?;
                Ok(STy::Refine(p))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Sym("*") => {
                self.bump();
                Ok(STy::Marked(self.cident()?))
            }
            Tok::CIdent(c) => {
                self.bump();
                if self.eat_sym("[") {
                    let mut args = Vec::new();
                    if !self.is_sym("]") {
                        loop {
                            args.push(self.ty()?);
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    self.expect_sym("]")?;
                    Ok(STy::Ctor(c, args))
                } else {
                    Ok(STy::Name(c, pos))
                }
            }
            Tok::Ident(n) if !is_reserved(&n) => {
                self.bump();
                Err(FrontendError::UnknownAbbreviation { pos, name: n })
            }
            _ => self.error(&["{", "(", "type name"]),
        }
    }

    /// Type term after `::` inside a formula.
    fn type_term(&mut self) -> PResult<TypeTerm> {
        let pos = self.pos();
        let t = self.arrow_ty()?;
        to_term(&t, pos)
    }

    // -- formulas ----------------------------------------------------------

    pub fn formula(&mut self) -> PResult<Formula> {
        let p = self.implication()?;
        if self.eat_sym("<=>") {
            let q = self.implication()?;
            return Ok(Formula::iff(p, q));
        }
        Ok(p)
    }

    fn implication(&mut self) -> PResult<Formula> {
        let p = self.disjunction()?;
        if self.eat_sym("=>") {
            let q = self.implication()?;
            return Ok(Formula::implies(p, q));
        }
        Ok(p)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut ps = vec![self.conjunction()?];
        while self.eat_sym("\\/") {
            ps.push(self.conjunction()?);
        }
        Ok(if ps.len() == 1 {
            ps.pop().unwrap()
        } else {
            Formula::Or(ps)
        })
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut ps = vec![self.negation()?];
        while self.eat_sym("/\\") {
            ps.push(self.negation()?);
        }
        Ok(if ps.len() == 1 {
            ps.pop().unwrap()
        } else {
            Formula::And(ps)
        })
    }

    fn negation(&mut self) -> PResult<Formula> {
        if self.eat_kw("not") {
            return Ok(Formula::not(self.negation()?));
        }
        self.atom_formula()
    }

    fn atom_formula(&mut self) -> PResult<Formula> {
        let start = self.i;
        let relational = self.relation();
        if relational.is_ok() {
            return relational;
        }
        let furthest = self.i;
        self.i = start;
        if self.eat_sym("(") {
            let p = self.formula()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        if self.eat_kw("true") {
            return Ok(Formula::True);
        }
        if self.eat_kw("false") {
            return Ok(Formula::False);
        }
        if let Tok::CIdent(c) = self.peek().clone() {
            if ABBREVIATIONS.contains(&c.as_str()) && matches!(self.peek_at(1), Tok::Sym("(")) {
                let pos = self.pos();
                self.bump();
                self.bump();
                let lw = self.lterm()?;
                self.expect_sym(")")?;
                let t = desugar_mono(&STy::Name(c, pos), pos)?;
                return Ok(t.0.subst_nu(&lw));
            }
        }
        if let Tok::Ident(n) = self.peek().clone() {
            match n.as_str() {
                "has" => {
                    self.bump();
                    let args = self.lterm_args(2)?;
                    return Ok(Formula::Pred(Pred::Has, args));
                }
                "eqmod" => {
                    self.bump();
                    let args = self.lterm_args(3)?;
                    return Ok(Formula::Pred(Pred::EqMod, args));
                }
                "fld" => {
                    self.bump();
                    return self.field_formula();
                }
                _ => {}
            }
        }
        self.i = furthest.max(start);
        relational
    }

    /// `fld(x, y, T)`: `x` is a dictionary with a key `y` whose binding has type `T`.
    fn field_formula(&mut self) -> PResult<Formula> {
        self.expect_sym("(")?;
        let d = self.lterm()?;
        self.expect_sym(",")?;
        let k = self.lterm()?;
        self.expect_sym(",")?;
        let pos = self.pos();
        let t = self.arrow_ty()?;
        self.expect_sym(")")?;
        let sel = LVal::sel(d.clone(), k.clone());
        let binding = match &t {
            STy::Name(n, _) if ABBREVIATIONS.contains(&n.as_str()) => {
                desugar_mono(&t, pos)?.0.subst_nu(&sel)
            }
            _ => Formula::HasType(sel, to_term(&t, pos)?),
        };
        Ok(Formula::and(vec![
            Formula::tag_is(d.clone(), "Dict"),
            Formula::tag_is(k.clone(), "Str"),
            Formula::has(d, k),
            binding,
        ]))
    }

    fn relation(&mut self) -> PResult<Formula> {
        let a = self.lterm()?;
        let op = match self.peek() {
            Tok::Sym(s @ ("=" | "!=" | "<" | "<=" | ">" | ">=" | "::")) => *s,
            _ => return self.error(&["=", "!=", "<", "<=", ">", ">=", "::"]),
        };
        self.bump();
        if op == "::" {
            let u = self.type_term()?;
            return Ok(Formula::HasType(a, u));
        }
        let b = self.lterm()?;
        Ok(match op {
            "=" => Formula::eq(a, b),
            "!=" => Formula::ne(a, b),
            "<" => Formula::Pred(Pred::Lt, vec![a, b]),
            "<=" => Formula::Pred(Pred::Le, vec![a, b]),
            ">" => Formula::Pred(Pred::Lt, vec![b, a]),
            _ => Formula::Pred(Pred::Le, vec![b, a]),
        })
    }

    fn lterm_args(&mut self, n: usize) -> PResult<Vec<LVal>> {
        self.expect_sym("(")?;
        let mut args = vec![self.lterm()?];
        for _ in 1..n {
            self.expect_sym(",")?;
            args.push(self.lterm()?);
        }
        self.expect_sym(")")?;
        Ok(args)
    }

    pub fn lterm(&mut self) -> PResult<LVal> {
        let mut acc = self.lprim()?;
        loop {
            if self.eat_sym("+") {
                acc = LVal::plus(acc, self.lprim()?);
            } else if self.eat_sym("-") {
                acc = LVal::minus(acc, self.lprim()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn lprim(&mut self) -> PResult<LVal> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(LVal::int(n))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(LVal::str(&s))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.lterm()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Sym("{") if matches!(self.peek_at(1), Tok::Sym("}")) => {
                self.bump();
                self.bump();
                Ok(LVal::Val(Value::empty()))
            }
            Tok::Ident(n) => {
                self.bump();
                match n.as_str() {
                    "v" => Ok(LVal::Nu),
                    "true" => Ok(LVal::bool(true)),
                    "false" => Ok(LVal::bool(false)),
                    "null" => Ok(LVal::null()),
                    "empty" => Ok(LVal::Val(Value::empty())),
                    "tag" if self.is_sym("(") => Ok(LVal::tag(self.lterm_args(1)?.remove(0))),
                    "sel" => {
                        let mut a = self.lterm_args(2)?;
                        let k = a.pop().unwrap();
                        Ok(LVal::sel(a.pop().unwrap(), k))
                    }
                    other => match Prim::from_ident(other) {
                        Some(p) => Ok(LVal::Val(Value::prim(p))),
                        None if KEYWORDS.contains(&other) => {
                            self.i -= 1;
                            self.error(&["logical term"])
                        }
                        None => Ok(LVal::var(other)),
                    },
                }
            }
            _ => self.error(&["logical term"]),
        }
    }

    // -- expressions -------------------------------------------------------

    pub fn expr(&mut self) -> PResult<SExpr> {
        let pos = self.pos();
        if self.is_kw("let") {
            return self.let_expr();
        }
        if self.eat_kw("fun") {
            let mut params = Vec::new();
            while !self.is_sym("->") {
                params.push(self.param(true)?);
            }
            if params.is_empty() {
                return self.error(&["parameter"]);
            }
            self.expect_sym("->")?;
            let body = self.expr()?;
            return Ok(SExpr {
                kind: SKind::Fun(params, Box::new(body)),
                pos,
            });
        }
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let t = self.expr()?;
            self.expect_kw("else")?;
            let e = self.expr()?;
            return Ok(SExpr {
                kind: SKind::If(Box::new(c), Box::new(t), Box::new(e)),
                pos,
            });
        }
        self.comparison()
    }

    fn param(&mut self, allow_tyvar: bool) -> PResult<SParam> {
        let pos = self.pos();
        if self.eat_sym("(") {
            let x = self.ident()?;
            let ann = if self.eat_sym("::") {
                Some(self.ty()?)
            } else {
                None
            };
            self.expect_sym(")")?;
            return Ok(SParam::Var(x, ann, pos));
        }
        if allow_tyvar && self.eat_sym("[") {
            let a = self.cident()?;
            self.expect_sym("]")?;
            return Ok(SParam::TyVar(a));
        }
        Ok(SParam::Var(self.ident()?, None, pos))
    }

    fn let_expr(&mut self) -> PResult<SExpr> {
        let pos = self.pos();
        self.expect_kw("let")?;
        let recursive = self.eat_kw("rec");
        let name = self.ident()?;
        let mut params = Vec::new();
        while !self.is_sym("::") && !self.is_sym("=") {
            params.push(self.param(false)?);
        }
        let ann = if self.eat_sym("::") {
            Some(self.ty()?)
        } else {
            None
        };
        self.expect_sym("=")?;
        let rhs = self.expr()?;
        self.expect_kw("in")?;
        let body = self.expr()?;
        Ok(SExpr {
            kind: SKind::Let {
                recursive,
                name,
                params,
                ann,
                rhs: Box::new(rhs),
                body: Box::new(body),
            },
            pos,
        })
    }

    fn comparison(&mut self) -> PResult<SExpr> {
        let a = self.additive()?;
        if self.is_sym("=") {
            let pos = self.pos();
            self.bump();
            let b = self.additive()?;
            return Ok(SExpr {
                kind: SKind::Binop(Prim::Eq, Box::new(a), Box::new(b)),
                pos,
            });
        }
        Ok(a)
    }

    fn additive(&mut self) -> PResult<SExpr> {
        let mut acc = self.application()?;
        loop {
            let pos = self.pos();
            let op = if self.eat_sym("+") {
                Prim::Plus
            } else if self.eat_sym("-") {
                Prim::Minus
            } else {
                return Ok(acc);
            };
            let rhs = self.application()?;
            acc = SExpr {
                kind: SKind::Binop(op, Box::new(acc), Box::new(rhs)),
                pos,
            };
        }
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::Str(_) => true,
            Tok::Ident(s) => {
                !KEYWORDS.contains(&s.as_str())
                    || matches!(s.as_str(), "true" | "false" | "null" | "not")
            }
            Tok::Sym("(") | Tok::Sym("{") => true,
            _ => false,
        }
    }

    fn application(&mut self) -> PResult<SExpr> {
        let mut acc = self.postfix()?;
        while self.starts_atom() || self.is_kw("new") {
            let pos = acc.pos;
            let arg = self.postfix()?;
            acc = SExpr {
                kind: SKind::App(Box::new(acc), Box::new(arg)),
                pos,
            };
        }
        Ok(acc)
    }

    /// Whether the bracketed suffix starting at the cursor (just past `[`) is a type.
    fn bracket_holds_type(&self) -> bool {
        match (self.peek(), self.peek_at(1), self.peek_at(2)) {
            (Tok::CIdent(_), _, _) => true,
            (Tok::Sym("*"), _, _) => true,
            (Tok::Ident(f), _, _) if f == "forall" => true,
            (Tok::Ident(_), Tok::Sym(":"), _) => true,
            (Tok::Sym("{"), Tok::Ident(v), Tok::Sym("|")) if v == "v" => true,
            _ => false,
        }
    }

    fn postfix(&mut self) -> PResult<SExpr> {
        let mut acc = self.atom()?;
        while self.is_sym("[") {
            let pos = self.pos();
            self.bump();
            if self.bracket_holds_type() {
                let t = self.ty()?;
                self.expect_sym("]")?;
                acc = SExpr {
                    kind: SKind::TApp(Box::new(acc), t),
                    pos,
                };
            } else {
                let k = self.expr()?;
                self.expect_sym("]")?;
                acc = SExpr {
                    kind: SKind::Get(Box::new(acc), Box::new(k)),
                    pos,
                };
            }
        }
        Ok(acc)
    }

    fn atom(&mut self) -> PResult<SExpr> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                SKind::Int(n)
            }
            Tok::Str(s) => {
                self.bump();
                SKind::Str(s)
            }
            Tok::Sym("(") => {
                self.bump();
                let op = match (self.peek(), self.peek_at(1)) {
                    (Tok::Sym("+"), Tok::Sym(")")) => Some(Prim::Plus),
                    (Tok::Sym("-"), Tok::Sym(")")) => Some(Prim::Minus),
                    (Tok::Sym("="), Tok::Sym(")")) => Some(Prim::Eq),
                    _ => None,
                };
                if let Some(p) = op {
                    self.bump();
                    self.bump();
                    SKind::Prim(p)
                } else {
                    let e = self.expr()?;
                    self.expect_sym(")")?;
                    return Ok(e);
                }
            }
            Tok::Sym("{") => {
                self.bump();
                let mut entries = Vec::new();
                if !self.is_sym("}") {
                    loop {
                        let k = match self.bump() {
                            Tok::Str(s) => s,
                            _ => {
                                self.i -= 1;
                                return self.error(&["string key"]);
                            }
                        };
                        self.expect_sym(":")?;
                        let v = self.expr()?;
                        entries.push((k, v));
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.expect_sym("}")?;
                SKind::Dict(entries)
            }
            Tok::Ident(n) => {
                self.bump();
                match n.as_str() {
                    "true" => SKind::Bool(true),
                    "false" => SKind::Bool(false),
                    "null" => SKind::Null,
                    "new" => return self.new_expr(pos),
                    "v" => {
                        self.i -= 1;
                        return Err(FrontendError::Parse {
                            pos,
                            msg: "`v` is reserved for the value variable of refinements".into(),
                            expected: vec!["expression".into()],
                        });
                    }
                    other => match Prim::from_ident(other) {
                        Some(p) => SKind::Prim(p),
                        None if KEYWORDS.contains(&other) => {
                            self.i -= 1;
                            return self.error(&["expression"]);
                        }
                        None => SKind::Var(other.to_string()),
                    },
                }
            }
            _ => return self.error(&["expression"]),
        };
        Ok(SExpr { kind, pos })
    }

    fn new_expr(&mut self, pos: Pos) -> PResult<SExpr> {
        let c = self.cident()?;
        let targs = if self.eat_sym("[") {
            let mut ts = Vec::new();
            if !self.is_sym("]") {
                loop {
                    ts.push(self.ty()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym("]")?;
            Some(ts)
        } else {
            None
        };
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(SExpr {
            kind: SKind::New(c, targs, args),
            pos,
        })
    }
}

fn collect_marked(p: &Formula, out: &mut Vec<String>) {
    let mut terms = Vec::new();
    p.top_type_terms(&mut terms);
    for u in terms {
        collect_marked_term(&u, out);
    }
}

fn collect_marked_term(u: &TypeTerm, out: &mut Vec<String>) {
    match u {
        TypeTerm::TyVar(a, true) => out.push(a.clone()),
        TypeTerm::Arrow(_, t1, t2) => {
            collect_marked(&t1.0, out);
            collect_marked(&t2.0, out);
        }
        TypeTerm::Ctor(_, ts) => ts.iter().for_each(|t| collect_marked(&t.0, out)),
        _ => {}
    }
}

// ---------------------------------------------------------------------------
// Desugaring of surface types

/// Expands abbreviations and arrow/constructor shorthands into a core scheme.
pub fn desugar_type(t: &STy, pos: Pos) -> Result<Scheme, FrontendError> {
    match t {
        STy::Forall(vars, body) => {
            let inner = desugar_type(body, pos)?;
            Ok(vars
                .iter()
                .rev()
                .fold(inner, |acc, a| Scheme::Forall(a.clone(), Box::new(acc))))
        }
        other => Ok(Scheme::Mono(desugar_mono(other, pos)?)),
    }
}

pub fn desugar_mono(t: &STy, pos: Pos) -> Result<RefType, FrontendError> {
    Ok(match t {
        STy::Refine(p) => RefType(p.clone()),
        STy::Name(n, p) => match n.as_str() {
            "Int" => RefType::int(),
            "Bool" => RefType::bool(),
            "Str" => RefType::str(),
            "Dict" => RefType::dict(),
            "Top" => RefType::top(),
            "IorB" => RefType::ior_b(),
            "Null" => RefType::singleton(LVal::null()),
            _ if n.len() <= 2 || n.chars().all(|c| c.is_uppercase() || c.is_ascii_digit()) => {
                RefType::tyvar(n)
            }
            _ => {
                return Err(FrontendError::UnknownAbbreviation {
                    pos: *p,
                    name: n.clone(),
                })
            }
        },
        STy::Marked(a) => RefType::of_term(TypeTerm::TyVar(a.clone(), true)),
        other => RefType::of_term(to_term(other, pos)?),
    })
}

/// Reads a surface type as a type term (the operand of `::`).
pub fn to_term(t: &STy, pos: Pos) -> Result<TypeTerm, FrontendError> {
    match t {
        STy::Arrow(x, a, b) => Ok(TypeTerm::Arrow(
            x.clone().unwrap_or_else(|| "_".into()),
            Box::new(desugar_mono(a, pos)?),
            Box::new(desugar_mono(b, pos)?),
        )),
        STy::Ctor(c, args) => Ok(TypeTerm::Ctor(
            c.clone(),
            args.iter()
                .map(|a| desugar_mono(a, pos))
                .collect::<Result<_, _>>()?,
        )),
        STy::Marked(a) => Ok(TypeTerm::TyVar(a.clone(), true)),
        STy::Name(n, _) if n == "Null" => Ok(TypeTerm::Null),
        STy::Name(n, p) if ABBREVIATIONS.contains(&n.as_str()) => Err(FrontendError::Parse {
            pos: *p,
            msg: format!("{n} abbreviates a refinement, not a type term"),
            expected: vec!["type term".into()],
        }),
        STy::Name(n, p) => match desugar_mono(t, *p)? {
            RefType(Formula::HasType(_, u)) => Ok(u),
            _ => Err(FrontendError::UnknownAbbreviation {
                pos: *p,
                name: n.clone(),
            }),
        },
        STy::Refine(_) | STy::Forall(..) => Err(FrontendError::Parse {
            pos,
            msg: "expected a type term".into(),
            expected: vec![
                "arrow".into(),
                "type variable".into(),
                "constructed type".into(),
                "Null".into(),
            ],
        }),
    }
}

pub fn parse(text: &str) -> Result<SourceProgram, FrontendError> {
    Parser::new(text)?.program()
}

pub fn parse_type(text: &str) -> Result<Scheme, FrontendError> {
    let mut p = Parser::new(text)?;
    let pos = p.pos();
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return p.error(&["end of input"]);
    }
    desugar_type(&t, pos)
}

pub fn parse_formula(text: &str) -> Result<Formula, FrontendError> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.error(&["end of input"]);
    }
    Ok(f)
}
