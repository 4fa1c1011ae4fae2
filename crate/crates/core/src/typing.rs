//! Bidirectional type synthesis and conversion.

use std::fmt;

use crate::constants::const_type;
use crate::datatype::{field_types, fold_formula, lookup, DataError, Inst};
use crate::env::TypeEnv;
use crate::logic::LogicError;
use crate::smt::{Session, SmtError};
use crate::subtype::{Engine, SubError, UsedSet};
use crate::syntax::*;
use crate::wf::{check_reftype, check_type, WfError};

/// A type error, named after the rule whose premise failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError {
    pub rule: &'static str,
    pub message: String,
    /// The clause that could not be discharged, when subtyping failed.
    pub clause: Option<String>,
    /// Type terms tried by extraction for that clause.
    pub candidates: Vec<String>,
    /// Innermost let-binder being checked.
    pub binder: Option<Name>,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.rule, self.message)?;
        if let Some(c) = &self.clause {
            write!(f, "\n  unproved clause: {c}")?;
            if !self.candidates.is_empty() {
                write!(f, "\n  candidates: {}", self.candidates.join(", "))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("{0}")]
    Type(TypeError),
    #[error(transparent)]
    Solver(#[from] SmtError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

impl CheckError {
    pub fn as_type_error(&self) -> Option<&TypeError> {
        match self {
            CheckError::Type(t) => Some(t),
            _ => None,
        }
    }
}

pub type CResult<T> = Result<T, CheckError>;

#[derive(Clone, Copy, Debug, Default)]
pub struct CheckOptions {
    /// Restrict variable elimination to the printed cases (`∧` and `⇒`).
    pub strict_elim: bool,
}

pub struct Checker {
    pub eng: Engine,
    pub opts: CheckOptions,
    binders: Vec<Name>,
}

fn mono(t: RefType) -> Scheme {
    Scheme::Mono(t)
}

fn is_arrow(u: &TypeTerm) -> bool {
    matches!(u, TypeTerm::Arrow(..))
}

fn show_terms(us: &[TypeTerm]) -> String {
    let v: Vec<String> = us.iter().map(|u| u.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

impl Checker {
    pub fn new(session: Session, defs: DefEnv, opts: CheckOptions) -> Checker {
        Checker {
            eng: Engine::new(session, defs),
            opts,
            binders: Vec::new(),
        }
    }

    fn fail<T>(&self, rule: &'static str, message: impl Into<String>) -> CResult<T> {
        Err(CheckError::Type(TypeError {
            rule,
            message: message.into(),
            clause: None,
            candidates: Vec::new(),
            binder: self.binders.last().cloned(),
        }))
    }

    fn lift_sub(&self, rule: &'static str, what: String, e: SubError) -> CheckError {
        match e {
            SubError::Smt(e) => CheckError::Solver(e),
            SubError::Logic(e) => CheckError::Logic(e),
            SubError::Clause { clause, candidates } => CheckError::Type(TypeError {
                rule,
                message: format!("{what} (CA-ImpSyn)"),
                clause: Some(clause.to_string()),
                candidates: candidates.iter().map(|u| u.to_string()).collect(),
                binder: self.binders.last().cloned(),
            }),
            other => CheckError::Type(TypeError {
                rule,
                message: format!("{what}: {other} ({})", other.rule()),
                clause: None,
                candidates: Vec::new(),
                binder: self.binders.last().cloned(),
            }),
        }
    }

    fn lift_data(&self, rule: &'static str, e: DataError) -> CheckError {
        CheckError::Type(TypeError {
            rule,
            message: e.to_string(),
            clause: None,
            candidates: Vec::new(),
            binder: self.binders.last().cloned(),
        })
    }

    fn lift_wf(&self, rule: &'static str, e: WfError) -> CheckError {
        CheckError::Type(TypeError {
            rule,
            message: format!("ill-formed type: {e}"),
            clause: None,
            candidates: Vec::new(),
            binder: self.binders.last().cloned(),
        })
    }

    fn sub_at(&mut self, rule: &'static str, g: &TypeEnv, s1: &Scheme, s2: &Scheme) -> CResult<()> {
        self.eng
            .subtype(g, s1, s2)
            .map_err(|e| self.lift_sub(rule, format!("{s1} is not a subtype of {s2}"), e))
    }

    fn inconsistent(&mut self, g: &TypeEnv) -> CResult<bool> {
        self.eng.inconsistent(g).map_err(|e| self.lift_sub("TS-False", String::new(), e))
    }

    fn extend(&mut self, g: &TypeEnv, x: &str, s: &Scheme) -> CResult<TypeEnv> {
        self.eng
            .extend(g, x, s)
            .map_err(|e| self.lift_sub("Extend", format!("while binding {x}"), e))
    }

    fn must_flow_arrows(&mut self, g: &TypeEnv, t: &RefType) -> CResult<Vec<TypeTerm>> {
        self.eng
            .must_flow_filtered(g, t, &UsedSet::new(), is_arrow)
            .map_err(|e| self.lift_sub("MustFlow", String::new(), e))
    }

    fn wf_type(&self, rule: &'static str, g: &TypeEnv, s: &Scheme) -> CResult<()> {
        check_type(&self.eng.defs, g, s).map_err(|e| self.lift_wf(rule, e))
    }

    fn wf_reftype(&self, rule: &'static str, g: &TypeEnv, t: &RefType) -> CResult<()> {
        check_reftype(&self.eng.defs, g, t).map_err(|e| self.lift_wf(rule, e))
    }

    // -- synthesis ---------------------------------------------------------

    /// `Γ ⊢ e ⇒ S`.
    pub fn synth(&mut self, g: &TypeEnv, e: &Expr) -> CResult<Scheme> {
        if self.inconsistent(g)? {
            return Ok(mono(RefType::bot()));
        }
        match e {
            Expr::Val(w) => self.synth_value(g, w),
            Expr::App(w1, w2) => self.synth_app(g, w1, w2),
            Expr::TApp(w, t) => {
                self.wf_reftype("T-TApp", g, t)?;
                match self.synth_value(g, w)? {
                    Scheme::Forall(a, s) => Ok(s.inst(&a, t)),
                    s => self.fail("T-TApp", format!("{w} has type {s}, which is not polymorphic")),
                }
            }
            Expr::If(w, e1, e2) => {
                self.convert_value(g, w, &mono(RefType::bool()), "TS-If")?;
                let lw = LVal::Val(w.clone());
                let yes = Formula::eq(lw.clone(), LVal::bool(true));
                let no = Formula::eq(lw, LVal::bool(false));
                let p1 = self.synth_mono(&g.guard(yes.clone()), e1, "TS-If")?;
                let p2 = self.synth_mono(&g.guard(no.clone()), e2, "TS-If")?;
                Ok(mono(RefType(Formula::And(vec![
                    Formula::implies(yes, p1.0),
                    Formula::implies(no, p2.0),
                ]))))
            }
            Expr::Let(x, ann, e1, e2) => {
                self.binders.push(x.clone());
                let r = self.synth_let(g, x, ann.as_ref(), e1, e2);
                self.binders.pop();
                r
            }
        }
    }

    fn synth_mono(&mut self, g: &TypeEnv, e: &Expr, rule: &'static str) -> CResult<RefType> {
        match self.synth(g, e)? {
            Scheme::Mono(t) => Ok(t),
            s => self.fail(rule, format!("expected a monomorphic type, found {s}")),
        }
    }

    fn synth_value(&mut self, g: &TypeEnv, w: &Value) -> CResult<Scheme> {
        match w {
            Value::Const(Const::Partial(..)) => self.fail("TS-Const", "partial primitive in source"),
            Value::Const(c) => Ok(const_type(c)),
            Value::Var(x) => match g.lookup(x) {
                Some(Scheme::Mono(_)) => Ok(mono(RefType::singleton(LVal::var(x)))),
                Some(s) => Ok(s.clone()),
                None => self.fail("TS-Var", format!("unbound variable {x}")),
            },
            Value::Extend(d, k, v) => {
                self.convert_value(g, d, &mono(RefType::dict()), "T-Extend")?;
                self.convert_value(g, k, &mono(RefType::str()), "T-Extend")?;
                self.synth_value(g, v)?;
                Ok(mono(RefType::singleton(LVal::Val(w.clone()))))
            }
            Value::Fun(x, ann, body) => {
                let rule = if ann.is_some() { "TS-FunAnn" } else { "TS-FunBare" };
                let t1 = ann.as_deref().cloned().unwrap_or_else(RefType::top);
                self.wf_reftype(rule, g, &t1)?;
                let g1 = self.extend(g, x, &mono(t1.clone()))?;
                let t2 = self.synth_mono(&g1, body, rule)?;
                Ok(mono(RefType::of_term(TypeTerm::Arrow(x.clone(), Box::new(t1), Box::new(t2)))))
            }
            Value::TFun(a, body) => {
                if g.has_tyvar(a) {
                    return self.fail("T-TFun", format!("type variable {a} is already in scope"));
                }
                let s = self.synth(&g.tyvar(a), body)?;
                Ok(Scheme::Forall(a.clone(), Box::new(s)))
            }
            Value::New(c, targs, args) => {
                let targs = match targs {
                    Some(ts) => {
                        for t in ts {
                            self.wf_reftype("T-Fold", g, t)?;
                        }
                        ts.clone()
                    }
                    None => self.infer_targs(g, c, args)?,
                };
                let fields = field_types(&self.eng.defs, c, &targs).map_err(|e| self.lift_data("T-Fold", e))?;
                if fields.len() != args.len() {
                    return self.fail("T-Fold", format!("{c} has {} fields, given {}", fields.len(), args.len()));
                }
                for ((_, t), a) in fields.iter().zip(args) {
                    self.convert_value(g, a, &mono(t.clone()), "T-Fold")?;
                }
                let p = fold_formula(&self.eng.defs, c, &targs, args).map_err(|e| self.lift_data("T-Fold", e))?;
                Ok(mono(RefType(p)))
            }
        }
    }

    /// Infers omitted type arguments from the marked parameter occurrences.
    fn infer_targs(&mut self, g: &TypeEnv, c: &str, args: &[Value]) -> CResult<Vec<RefType>> {
        let d = lookup(&self.eng.defs, c).map_err(|e| self.lift_data("T-Fold", e))?.clone();
        if d.params.is_empty() {
            return Ok(Vec::new());
        }
        if !d.params.iter().all(|p| p.marked) {
            return self.fail("T-Fold", format!("type arguments of {c} cannot be inferred and must be given"));
        }
        if d.fields.len() != args.len() {
            return self.fail("T-Fold", format!("{c} has {} fields, given {}", d.fields.len(), args.len()));
        }
        let mut out = Vec::new();
        for p in &d.params {
            let Some(j) = d.fields.iter().position(|(_, t)| marks(&t.0, &p.name)) else {
                return self.fail("T-Fold", format!("no marked occurrence of {} in {c}", p.name));
            };
            let actual = match self.synth_value(g, &args[j])? {
                Scheme::Mono(t) => t,
                s => return self.fail("T-Fold", format!("argument {} has polymorphic type {s}", args[j])),
            };
            match self.take_marked(g, &d.fields[j].1, &actual, &p.name)? {
                Some(t) => out.push(t),
                None => {
                    return self.fail(
                        "T-Fold",
                        format!("cannot infer {} of {c} from argument {} of type {actual}", p.name, args[j]),
                    )
                }
            }
        }
        Ok(out)
    }

    /// Matches the marked occurrence of `a` in `pattern` against the type of an argument.
    fn take_marked(&mut self, g: &TypeEnv, pattern: &RefType, actual: &RefType, a: &str) -> CResult<Option<RefType>> {
        match &pattern.0 {
            Formula::HasType(LVal::Nu, TypeTerm::TyVar(b, true)) if b == a => Ok(Some(actual.clone())),
            Formula::HasType(LVal::Nu, TypeTerm::Ctor(c, pargs)) => {
                let Some(i) = pargs.iter().position(|t| marks(&t.0, a)) else {
                    return Ok(None);
                };
                let found = self
                    .eng
                    .must_flow_filtered(g, actual, &UsedSet::new(), |u| matches!(u, TypeTerm::Ctor(c2, _) if c2 == c))
                    .map_err(|e| self.lift_sub("T-Fold", String::new(), e))?;
                match found.as_slice() {
                    [TypeTerm::Ctor(_, aargs)] => self.take_marked(g, &pargs[i], &aargs[i].clone(), a),
                    _ => Ok(None),
                }
            }
            _ => Ok(None),
        }
    }

    fn synth_app(&mut self, g: &TypeEnv, w1: &Value, w2: &Value) -> CResult<Scheme> {
        let t1 = match self.synth_value(g, w1)? {
            Scheme::Mono(t) => t,
            s => return self.fail("TS-App1", format!("{w1} has polymorphic type {s} and needs a type instantiation")),
        };
        let arrows = self.must_flow_arrows(g, &t1)?;
        if arrows.is_empty() {
            return self.fail("TS-App1", format!("no arrow type flows to {w1} : {t1}"));
        }
        let mut last = None;
        if let Ok(Scheme::Mono(t2)) = self.synth_value_soft(g, w2)? {
            let mut ok = Vec::new();
            for u in &arrows {
                let TypeTerm::Arrow(_, t11, _) = u else { unreachable!() };
                match self.sub_at("TS-App1", g, &mono(t2.clone()), &mono((**t11).clone())) {
                    Ok(()) => ok.push(u.clone()),
                    Err(CheckError::Type(e)) => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            match ok.as_slice() {
                [TypeTerm::Arrow(x, _, t12)] => return Ok(mono(t12.subst(x, w2))),
                [] => {}
                _ => {
                    return self.fail(
                        "TS-App1",
                        format!("ambiguous application of {w1}: arrows {} all accept {w2}", show_terms(&ok)),
                    )
                }
            }
        }
        let u = self.filter_by_arg_val(g, &arrows, w1, w2, "TS-App2", last)?;
        let TypeTerm::Arrow(x, _, t12) = u else { unreachable!() };
        Ok(mono(t12.subst(&x, w2)))
    }

    /// Synthesis whose type errors are returned as values, for rules that fall back on failure.
    fn synth_value_soft(&mut self, g: &TypeEnv, w: &Value) -> CResult<Result<Scheme, TypeError>> {
        match self.synth_value(g, w) {
            Ok(s) => Ok(Ok(s)),
            Err(CheckError::Type(e)) => Ok(Err(e)),
            Err(e) => Err(e),
        }
    }

    /// `FilterByArgVal`: the unique arrow whose domain `w2` converts to.
    fn filter_by_arg_val(
        &mut self,
        g: &TypeEnv,
        arrows: &[TypeTerm],
        w1: &Value,
        w2: &Value,
        rule: &'static str,
        mut last: Option<TypeError>,
    ) -> CResult<TypeTerm> {
        let mut ok = Vec::new();
        for u in arrows {
            let TypeTerm::Arrow(_, t11, _) = u else { continue };
            match self.convert_value(g, w2, &mono((**t11).clone()), rule) {
                Ok(()) => ok.push(u.clone()),
                Err(CheckError::Type(e)) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        match ok.len() {
            1 => Ok(ok.pop().unwrap()),
            0 => {
                let mut err = TypeError {
                    rule,
                    message: format!("no arrow in {} flowing to {w1} accepts the argument {w2}", show_terms(arrows)),
                    clause: None,
                    candidates: Vec::new(),
                    binder: self.binders.last().cloned(),
                };
                if let Some(l) = last {
                    err.message = format!("{}; {}", err.message, l.message);
                    err.clause = l.clause;
                    err.candidates = l.candidates;
                }
                Err(CheckError::Type(err))
            }
            _ => self.fail(rule, format!("ambiguous application of {w1}: arrows {} all accept {w2}", show_terms(&ok))),
        }
    }

    fn synth_let(&mut self, g: &TypeEnv, x: &str, ann: Option<&Scheme>, e1: &Expr, e2: &Expr) -> CResult<Scheme> {
        let (s, rule) = match ann {
            Some(s) => {
                self.wf_type("TS-LetAnn", g, s)?;
                self.convert(g, e1, s)?;
                (s.clone(), "TS-LetAnn")
            }
            None => (self.synth(g, e1)?, "TS-LetBare"),
        };
        let g1 = self.extend(g, x, &s)?;
        let t = self.synth(&g1, e2)?;
        let _ = rule;
        if check_type(&self.eng.defs, g, &t).is_ok() {
            return Ok(t);
        }
        if let Scheme::Mono(body) = &t {
            if let Some(t2) = self.elim(x, &s, body) {
                if check_reftype(&self.eng.defs, g, &t2).is_ok() {
                    return Ok(mono(t2));
                }
            }
        }
        Ok(mono(RefType::top()))
    }

    // -- conversion --------------------------------------------------------

    /// `Γ ⊢ e ⇐ S`.
    pub fn convert(&mut self, g: &TypeEnv, e: &Expr, s: &Scheme) -> CResult<()> {
        if self.inconsistent(g)? {
            return Ok(());
        }
        match (e, s) {
            (Expr::Val(Value::TFun(b, body)), Scheme::Forall(a, s1)) => {
                if g.has_tyvar(b) {
                    return self.fail("T-TFun", format!("type variable {b} is already in scope"));
                }
                let s1 = if a == b { (**s1).clone() } else { s1.rename_tyvar(a, b) };
                self.convert(&g.tyvar(b), body, &s1)
            }
            (Expr::Val(Value::Fun(x, ann, body)), Scheme::Mono(t)) => self.convert_fun(g, x, ann.as_deref(), body, t),
            (Expr::Val(w), _) => self.convert_value(g, w, s, value_rule(w)),
            (Expr::App(w1, w2), Scheme::Mono(t)) => self.convert_app(g, w1, w2, t),
            (Expr::If(w, e1, e2), _) => {
                self.convert_value(g, w, &mono(RefType::bool()), "TC-If")?;
                let lw = LVal::Val(w.clone());
                self.convert(&g.guard(Formula::eq(lw.clone(), LVal::bool(true))), e1, s)?;
                self.convert(&g.guard(Formula::eq(lw, LVal::bool(false))), e2, s)
            }
            (Expr::Let(x, ann, e1, e2), _) => {
                self.binders.push(x.clone());
                let r = self.convert_let(g, x, ann.as_ref(), e1, e2, s);
                self.binders.pop();
                r
            }
            (Expr::App(..) | Expr::TApp(..), _) => {
                let s1 = self.synth(g, e)?;
                self.sub_at("T-Sub", g, &s1, s)
            }
        }
    }

    fn convert_value(&mut self, g: &TypeEnv, w: &Value, s: &Scheme, rule: &'static str) -> CResult<()> {
        if let (Value::Fun(x, ann, body), Scheme::Mono(t)) = (w, s) {
            if self.inconsistent(g)? {
                return Ok(());
            }
            return self.convert_fun(g, x, ann.as_deref(), body, t);
        }
        if let (Value::TFun(..), Scheme::Forall(..)) = (w, s) {
            return self.convert(g, &Expr::Val(w.clone()), s);
        }
        let s1 = self.synth_value(g, w)?;
        self.sub_at(rule, g, &s1, s)
    }

    fn convert_fun(&mut self, g: &TypeEnv, x: &str, ann: Option<&RefType>, body: &Expr, t: &RefType) -> CResult<()> {
        let rule = if ann.is_some() { "TC-FunAnn" } else { "TC-FunBare" };
        let Formula::HasType(LVal::Nu, TypeTerm::Arrow(y, t1, t2)) = &t.0 else {
            let w = Value::Fun(x.to_string(), ann.cloned().map(Box::new), Box::new(body.clone()));
            let s1 = self.synth_value(g, &w)?;
            return self.sub_at(rule, g, &s1, &mono(t.clone())).map_err(|e| match e {
                CheckError::Type(mut te) => {
                    te.message = format!("goal {t} is not an arrow refinement; {}", te.message);
                    CheckError::Type(te)
                }
                other => other,
            });
        };
        if let Some(ta) = ann {
            self.wf_reftype(rule, g, ta)?;
            self.sub_at(rule, g, &mono((**t1).clone()), &mono(ta.clone()))?;
        }
        let g1 = self.extend(g, x, &mono((**t1).clone()))?;
        let t2 = if y == x { (**t2).clone() } else { t2.subst(y, &Value::var(x)) };
        self.convert(&g1, body, &mono(t2))
    }

    fn convert_app(&mut self, g: &TypeEnv, w1: &Value, w2: &Value, t: &RefType) -> CResult<()> {
        let first: Result<(), TypeError> = match self.synth_value_soft(g, w1)? {
            Ok(Scheme::Mono(t1)) => {
                let arrows = self.must_flow_arrows(g, &t1)?;
                if arrows.is_empty() {
                    Err(TypeError {
                        rule: "TC-App1",
                        message: format!("no arrow type flows to {w1} : {t1}"),
                        clause: None,
                        candidates: Vec::new(),
                        binder: self.binders.last().cloned(),
                    })
                } else {
                    match self.filter_by_arg_val(g, &arrows, w1, w2, "TC-App1", None) {
                        Ok(TypeTerm::Arrow(x, _, t12)) => {
                            let out = mono(t12.subst(&x, w2));
                            return self.sub_at("TC-App1", g, &out, &mono(t.clone()));
                        }
                        Ok(_) => unreachable!(),
                        Err(CheckError::Type(e)) => Err(e),
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok(s) => Err(TypeError {
                rule: "TC-App1",
                message: format!("{w1} has polymorphic type {s} and needs a type instantiation"),
                clause: None,
                candidates: Vec::new(),
                binder: self.binders.last().cloned(),
            }),
            Err(e) => Err(e),
        };
        let Err(first) = first else { unreachable!() };
        let t2 = match self.synth_value_soft(g, w2)? {
            Ok(Scheme::Mono(t2)) => t2,
            _ => return Err(CheckError::Type(first)),
        };
        let z = self.eng.fresh();
        let goal = RefType::of_term(TypeTerm::Arrow(z, Box::new(t2), Box::new(t.clone())));
        match self.convert_value(g, w1, &mono(goal), "TC-App2") {
            Ok(()) => Ok(()),
            Err(CheckError::Type(_)) => Err(CheckError::Type(first)),
            Err(e) => Err(e),
        }
    }

    fn convert_let(&mut self, g: &TypeEnv, x: &str, ann: Option<&Scheme>, e1: &Expr, e2: &Expr, s: &Scheme) -> CResult<()> {
        let s1 = match ann {
            Some(s1) => {
                self.wf_type("TC-LetAnn", g, s1)?;
                self.convert(g, e1, s1)?;
                s1.clone()
            }
            None => self.synth(g, e1)?,
        };
        let g1 = self.extend(g, x, &s1)?;
        self.convert(&g1, e2, s)
    }

    // -- variable elimination ----------------------------------------------

    /// `Elim(Γ, x, S, T)`: rewrites `t` so that it no longer mentions `x`.
    pub fn elim(&self, x: &str, s: &Scheme, t: &RefType) -> Option<RefType> {
        let Scheme::Mono(sr) = s else { return None };
        let el = Elim { x, s: &sr.0, strict: self.opts.strict_elim };
        let p = el.formula(&t.0)?;
        if p.mentions(x) {
            None
        } else {
            Some(RefType(p))
        }
    }
}

fn value_rule(w: &Value) -> &'static str {
    match w {
        Value::Const(_) => "TC-Const",
        Value::Var(_) => "TC-Var",
        Value::Extend(..) => "T-Extend",
        Value::New(..) => "T-Fold",
        Value::Fun(..) => "TC-FunBare",
        Value::TFun(..) => "T-TFun",
    }
}

/// Whether `p` contains the marked occurrence of type variable `a`.
fn marks(p: &Formula, a: &str) -> bool {
    fn term(u: &TypeTerm, a: &str) -> bool {
        match u {
            TypeTerm::TyVar(b, m) => *m && b == a,
            TypeTerm::Arrow(_, t1, t2) => marks(&t1.0, a) || marks(&t2.0, a),
            TypeTerm::Ctor(_, ts) => ts.iter().any(|t| marks(&t.0, a)),
            TypeTerm::Null => false,
        }
    }
    match p {
        Formula::HasType(_, u) => term(u, a),
        Formula::And(ps) | Formula::Or(ps) => ps.iter().any(|q| marks(q, a)),
        Formula::Not(q) => marks(q, a),
        Formula::Implies(p, q) | Formula::Iff(p, q) => marks(p, a) || marks(q, a),
        _ => false,
    }
}

struct Elim<'a> {
    x: &'a str,
    /// Refinement of the eliminated variable's type.
    s: &'a Formula,
    strict: bool,
}

impl Elim<'_> {
    fn is_x(&self, lw: &LVal) -> bool {
        matches!(lw, LVal::Val(Value::Var(y)) if y == self.x)
    }

    /// `y` when `S = {ν | ν = y}`.
    fn singleton(&self) -> Option<&LVal> {
        match self.s {
            Formula::Pred(Pred::Eq, args) if args[0] == LVal::Nu && !args[1].mentions_nu() => Some(&args[1]),
            _ => None,
        }
    }

    /// `p` when `S = {ν | Bool(ν) ∧ (ν = true ⇔ p)}`.
    fn flag(&self) -> Option<&Formula> {
        let Formula::And(ps) = self.s else { return None };
        match ps.as_slice() {
            [tag, Formula::Iff(lhs, p)]
                if *tag == Formula::tag_is(LVal::Nu, "Bool")
                    && **lhs == Formula::eq(LVal::Nu, LVal::bool(true))
                    && !p.mentions_nu() =>
            {
                Some(p)
            }
            _ => None,
        }
    }

    fn formula(&self, p: &Formula) -> Option<Formula> {
        if !p.mentions(self.x) {
            return Some(p.clone());
        }
        match p {
            Formula::Pred(Pred::Eq, args) => {
                let (a, b) = (&args[0], &args[1]);
                if (*a == LVal::Nu && self.is_x(b)) || (self.is_x(a) && *b == LVal::Nu) {
                    return Some(self.s.clone());
                }
                let flag_value = match (a, b) {
                    (_, LVal::Val(Value::Const(Const::Bool(v)))) if self.is_x(a) => Some(*v),
                    (LVal::Val(Value::Const(Const::Bool(v))), _) if self.is_x(b) => Some(*v),
                    _ => None,
                };
                if let Some(v) = flag_value {
                    if let Some(q) = self.flag() {
                        return Some(if v { q.clone() } else { Formula::not(q.clone()) });
                    }
                    if let Some(y) = self.singleton() {
                        return Some(Formula::eq(y.clone(), LVal::bool(v)));
                    }
                    return None;
                }
                Some(Formula::eq(self.lval(a)?, self.lval(b)?))
            }
            Formula::Pred(pr, args) => Some(Formula::Pred(
                *pr,
                args.iter().map(|a| self.lval(a)).collect::<Option<_>>()?,
            )),
            Formula::HasType(lw, u) => Some(Formula::HasType(self.lval(lw)?, self.term(u)?)),
            Formula::And(ps) => Some(Formula::And(ps.iter().map(|q| self.formula(q)).collect::<Option<_>>()?)),
            Formula::Implies(a, b) => Some(Formula::implies(self.formula(a)?, self.formula(b)?)),
            _ if self.strict => None,
            Formula::Or(ps) => Some(Formula::Or(ps.iter().map(|q| self.formula(q)).collect::<Option<_>>()?)),
            Formula::Not(q) => Some(Formula::not(self.formula(q)?)),
            Formula::Iff(a, b) => Some(Formula::iff(self.formula(a)?, self.formula(b)?)),
            Formula::True | Formula::False => Some(p.clone()),
        }
    }

    fn lval(&self, lw: &LVal) -> Option<LVal> {
        if !lw.mentions(self.x) {
            return Some(lw.clone());
        }
        let y = self.singleton()?;
        match y {
            LVal::Val(w) => Some(lw.subst(self.x, w)),
            _ => self.replace(lw, y),
        }
    }

    fn replace(&self, lw: &LVal, y: &LVal) -> Option<LVal> {
        match lw {
            _ if self.is_x(lw) => Some(y.clone()),
            LVal::App(f, args) => Some(LVal::App(
                *f,
                args.iter().map(|a| self.replace(a, y)).collect::<Option<_>>()?,
            )),
            _ if lw.mentions(self.x) => None,
            _ => Some(lw.clone()),
        }
    }

    fn term(&self, u: &TypeTerm) -> Option<TypeTerm> {
        Some(match u {
            TypeTerm::Arrow(b, t1, t2) => TypeTerm::Arrow(
                b.clone(),
                Box::new(RefType(self.formula(&t1.0)?)),
                Box::new(RefType(self.formula(&t2.0)?)),
            ),
            TypeTerm::Ctor(c, ts) => TypeTerm::Ctor(
                c.clone(),
                ts.iter().map(|t| self.formula(&t.0).map(RefType)).collect::<Option<_>>()?,
            ),
            TypeTerm::TyVar(..) | TypeTerm::Null => u.clone(),
        })
    }
}

/// Checks a whole program body and returns its synthesized scheme.
pub fn check_program(checker: &mut Checker, e: &Expr) -> CResult<Scheme> {
    let s = checker.synth(&TypeEnv::new(), e)?;
    checker.wf_type("TS-Let", &TypeEnv::new(), &s)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{load_program, parse_formula, parse_type};
    use crate::smt::SolverConfig;

    fn checker(defs: DefEnv) -> Checker {
        Checker::new(Session::open(SolverConfig::default()).unwrap(), defs, CheckOptions::default())
    }

    fn ty(s: &str) -> RefType {
        parse_type(s).unwrap().as_mono().unwrap().clone()
    }

    fn check(src: &str) -> CResult<Scheme> {
        let p = load_program(src).unwrap();
        let mut c = checker(p.defs);
        check_program(&mut c, &p.body)
    }

    #[test]
    fn constants_are_singletons() {
        let mut c = checker(default_defs());
        let s = c.synth(&TypeEnv::new(), &Expr::Val(Value::int(3))).unwrap();
        assert_eq!(s, mono(RefType::singleton(LVal::int(3))));
    }

    #[test]
    fn if_tracks_guards() {
        let mut c = checker(default_defs());
        let g = TypeEnv::new().bind("b", mono(RefType::bool()));
        let e = Expr::If(Value::var("b"), Box::new(Expr::Val(Value::int(1))), Box::new(Expr::Val(Value::int(2))));
        let s = c.synth(&g, &e).unwrap();
        let want = parse_formula("(b = true => v = 1) /\\ (b = false => v = 2)").unwrap();
        assert_eq!(s, mono(RefType(want)));
    }

    #[test]
    fn inconsistent_env_synthesizes_false() {
        let mut c = checker(default_defs());
        let g = TypeEnv::new().guard(parse_formula("1 = 2").unwrap());
        let s = c.synth(&g, &Expr::App(Value::int(3), Value::int(4))).unwrap();
        assert_eq!(s, mono(RefType::bot()));
    }

    #[test]
    fn function_against_non_arrow_goal_fails() {
        let mut c = checker(default_defs());
        let e = Expr::Val(Value::fun("x", None, Expr::Val(Value::var("x"))));
        let err = c.convert(&TypeEnv::new(), &e, &mono(RefType::int())).unwrap_err();
        assert_eq!(err.as_type_error().unwrap().rule, "TC-FunBare");
        assert!(c.convert(&TypeEnv::new(), &Expr::Val(Value::int(0)), &mono(RefType::int())).is_ok());
    }

    #[test]
    fn negate_checks_with_dependent_type() {
        let s = check(
            r#"let negate (x :: {v | tag(v) = "Int" \/ tag(v) = "Bool"}) :: {v | tag(v) = tag(x)} =
                 if tag x = "Int" then 0 - x else not x in negate"#,
        )
        .unwrap();
        let want = parse_type(r#"x:{v | tag(v) = "Int" \/ tag(v) = "Bool"} -> {v | tag(v) = tag(x)}"#).unwrap();
        assert!(alpha_eq_scheme(&s, &want), "{s}");
    }

    #[test]
    fn negate_without_tag_test_fails() {
        let err = check(
            r#"let negate (x :: {v | tag(v) = "Int" \/ tag(v) = "Bool"}) :: {v | tag(v) = tag(x)} =
                 0 - x in negate"#,
        )
        .unwrap_err();
        assert!(err.as_type_error().is_some(), "{err}");
    }

    #[test]
    fn marked_parameter_inference() {
        let mut c = checker(default_defs());
        let g = TypeEnv::new().bind("xs", mono(ty("List[Int]")));
        let e = Expr::Val(Value::New("List".into(), None, vec![Value::int(1), Value::var("xs")]));
        let s = c.synth(&g, &e).unwrap();
        let Scheme::Mono(RefType(Formula::And(ps))) = s else { panic!() };
        assert_eq!(ps[2], Formula::HasType(LVal::Nu, TypeTerm::Ctor("List".into(), vec![RefType::int()])));

        let mut defs = default_defs();
        let l = defs.get_mut("List").unwrap();
        l.fields[0].1 = RefType(Formula::HasType(LVal::Nu, TypeTerm::TyVar("A".into(), true)));
        l.fields[1].1 = RefType(Formula::HasType(
            LVal::Nu,
            TypeTerm::Ctor("List".into(), vec![RefType(Formula::HasType(LVal::Nu, TypeTerm::TyVar("A".into(), false)))]),
        ));
        let mut c = checker(defs);
        assert!(c.synth(&g, &e).is_err());
    }

    #[test]
    fn elim_scenarios() {
        let c = checker(default_defs());
        // get_f: the body is exactly the bound variable.
        let s = mono(RefType::singleton(LVal::sel(LVal::var("x"), LVal::str("f"))));
        let t = c.elim("b", &s, &RefType::singleton(LVal::var("b"))).unwrap();
        assert_eq!(t, RefType::singleton(LVal::sel(LVal::var("x"), LVal::str("f"))));

        // maybe_get_f: a boolean flag.
        let s = mono(RefType(parse_formula("Bool(v) /\\ (v = true <=> has(x, \"f\"))").unwrap()));
        let t = RefType(parse_formula("(b = true => v = sel(x, \"f\")) /\\ (b = false => v = 0)").unwrap());
        let want = parse_formula("(has(x, \"f\") => v = sel(x, \"f\")) /\\ (not has(x, \"f\") => v = 0)").unwrap();
        assert_eq!(c.elim("b", &s, &t).unwrap().0, want);

        // aliasing.
        let s = mono(RefType::singleton(LVal::var("b")));
        let t = RefType(parse_formula("(b2 = true => v = 1) /\\ (b2 = false => v = 2)").unwrap());
        let want = parse_formula("(b = true => v = 1) /\\ (b = false => v = 2)").unwrap();
        assert_eq!(c.elim("b2", &s, &t).unwrap().0, want);

        // no rule applies.
        assert!(c.elim("b", &mono(RefType::int()), &RefType::singleton(LVal::var("b"))).is_some());
        assert!(c.elim("b", &mono(RefType::int()), &RefType(parse_formula("b = true").unwrap())).is_none());
    }
}
