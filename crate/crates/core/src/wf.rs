//! Well-formedness of formulas, types, environments and datatype definitions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::env::{EnvEntry, TypeEnv};
use crate::syntax::*;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum WfError {
    #[error("unbound variable `{0}`")]
    Unbound(Name),
    #[error("value variable used outside a refinement")]
    StrayNu,
    #[error("`{symbol}` expects {expected} arguments, found {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("unbound type variable `{0}`")]
    UnboundTyVar(Name),
    #[error("unknown type constructor `{0}`")]
    UnknownCtor(Name),
    #[error("duplicate {what} `{name}` in definition of `{ctor}`")]
    Duplicate {
        ctor: Name,
        what: &'static str,
        name: Name,
    },
    #[error("parameter `{param}` of `{ctor}` is declared {variance} but occurs at polarities {{{}}}", show_poles(.poles))]
    Variance {
        ctor: Name,
        param: Name,
        variance: Variance,
        poles: BTreeSet<Polarity>,
    },
    #[error("bad marking in `{ctor}`: {msg}")]
    Marking { ctor: Name, msg: String },
}

fn show_poles(p: &BTreeSet<Polarity>) -> String {
    p.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Pos,
    Neg,
}

impl Polarity {
    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Pos => Polarity::Neg,
            Polarity::Neg => Polarity::Pos,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Pos => "+",
            Polarity::Neg => "-",
        })
    }
}

struct Scope<'a> {
    defs: &'a DefEnv,
    vars: Vec<Name>,
    tyvars: Vec<Name>,
}

impl Scope<'_> {
    fn value(&self, w: &Value) -> Result<(), WfError> {
        for x in w.free_vars() {
            if !self.vars.contains(&x) {
                return Err(WfError::Unbound(x));
            }
        }
        Ok(())
    }

    fn lval(&self, lw: &LVal, nu_ok: bool) -> Result<(), WfError> {
        match lw {
            LVal::Nu if nu_ok => Ok(()),
            LVal::Nu => Err(WfError::StrayNu),
            LVal::Val(w) => self.value(w),
            LVal::App(f, args) => {
                if args.len() != f.arity() {
                    return Err(WfError::Arity {
                        symbol: format!("{f:?}").to_lowercase(),
                        expected: f.arity(),
                        found: args.len(),
                    });
                }
                args.iter().try_for_each(|a| self.lval(a, nu_ok))
            }
        }
    }

    fn formula(&mut self, p: &Formula, nu_ok: bool) -> Result<(), WfError> {
        match p {
            Formula::True | Formula::False => Ok(()),
            Formula::Pred(pr, args) => {
                if args.len() != pr.arity() {
                    return Err(WfError::Arity {
                        symbol: format!("{pr:?}").to_lowercase(),
                        expected: pr.arity(),
                        found: args.len(),
                    });
                }
                args.iter().try_for_each(|a| self.lval(a, nu_ok))
            }
            Formula::HasType(lw, u) => {
                self.lval(lw, nu_ok)?;
                self.term(u)
            }
            Formula::And(ps) | Formula::Or(ps) => {
                ps.iter().try_for_each(|q| self.formula(q, nu_ok))
            }
            Formula::Not(q) => self.formula(q, nu_ok),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                self.formula(a, nu_ok)?;
                self.formula(b, nu_ok)
            }
        }
    }

    fn reftype(&mut self, t: &RefType) -> Result<(), WfError> {
        self.formula(&t.0, true)
    }

    fn term(&mut self, u: &TypeTerm) -> Result<(), WfError> {
        match u {
            TypeTerm::Arrow(x, t1, t2) => {
                self.reftype(t1)?;
                self.vars.push(x.clone());
                let r = self.reftype(t2);
                self.vars.pop();
                r
            }
            TypeTerm::TyVar(a, _) => {
                if self.tyvars.contains(a) {
                    Ok(())
                } else {
                    Err(WfError::UnboundTyVar(a.clone()))
                }
            }
            TypeTerm::Null => Ok(()),
            TypeTerm::Ctor(c, ts) => {
                let d = self
                    .defs
                    .get(c)
                    .ok_or_else(|| WfError::UnknownCtor(c.clone()))?;
                if d.params.len() != ts.len() {
                    return Err(WfError::Arity {
                        symbol: c.clone(),
                        expected: d.params.len(),
                        found: ts.len(),
                    });
                }
                ts.iter().try_for_each(|t| self.reftype(t))
            }
        }
    }

    fn scheme(&mut self, s: &Scheme) -> Result<(), WfError> {
        match s {
            Scheme::Mono(t) => self.reftype(t),
            Scheme::Forall(a, body) => {
                self.tyvars.push(a.clone());
                let r = self.scheme(body);
                self.tyvars.pop();
                r
            }
        }
    }
}

fn scope_of<'a>(defs: &'a DefEnv, g: &TypeEnv) -> Scope<'a> {
    Scope {
        defs,
        vars: g.var_names().cloned().collect(),
        tyvars: g.tyvar_names().cloned().collect(),
    }
}

/// Checks that `p` is a proposition over the variables of `g`.
pub fn check_formula(defs: &DefEnv, g: &TypeEnv, p: &Formula) -> Result<(), WfError> {
    scope_of(defs, g).formula(p, false)
}

pub fn check_type(defs: &DefEnv, g: &TypeEnv, s: &Scheme) -> Result<(), WfError> {
    scope_of(defs, g).scheme(s)
}

pub fn check_reftype(defs: &DefEnv, g: &TypeEnv, t: &RefType) -> Result<(), WfError> {
    scope_of(defs, g).reftype(t)
}

pub fn check_env(defs: &DefEnv, g: &TypeEnv) -> Result<(), WfError> {
    let mut prefix = TypeEnv::new();
    for e in g.entries() {
        match e {
            EnvEntry::Bind(_, s) => check_type(defs, &prefix, s)?,
            EnvEntry::Guard(p) => check_formula(defs, &prefix, p)?,
            EnvEntry::TyVar(_) => {}
        }
        prefix.push(e.clone());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Polarities

pub fn poles_formula(defs: &DefEnv, a: &str, th: Polarity, p: &Formula) -> BTreeSet<Polarity> {
    let mut out = BTreeSet::new();
    walk_formula(defs, a, th, p, &mut out);
    out
}

pub fn poles_type(defs: &DefEnv, a: &str, th: Polarity, t: &RefType) -> BTreeSet<Polarity> {
    poles_formula(defs, a, th, &t.0)
}

pub fn poles_term(defs: &DefEnv, a: &str, th: Polarity, u: &TypeTerm) -> BTreeSet<Polarity> {
    let mut out = BTreeSet::new();
    walk_term(defs, a, th, u, &mut out);
    out
}

fn walk_formula(defs: &DefEnv, a: &str, th: Polarity, p: &Formula, out: &mut BTreeSet<Polarity>) {
    match p {
        Formula::True | Formula::False | Formula::Pred(..) => {}
        Formula::HasType(_, u) => walk_term(defs, a, th, u, out),
        Formula::And(ps) | Formula::Or(ps) => {
            ps.iter().for_each(|q| walk_formula(defs, a, th, q, out))
        }
        Formula::Not(q) => walk_formula(defs, a, th.flip(), q, out),
        Formula::Implies(q, r) => {
            walk_formula(defs, a, th.flip(), q, out);
            walk_formula(defs, a, th, r, out);
        }
        Formula::Iff(q, r) => {
            for x in [q, r] {
                walk_formula(defs, a, th, x, out);
                walk_formula(defs, a, th.flip(), x, out);
            }
        }
    }
}

fn walk_term(defs: &DefEnv, a: &str, th: Polarity, u: &TypeTerm, out: &mut BTreeSet<Polarity>) {
    match u {
        TypeTerm::TyVar(b, _) => {
            if b == a {
                out.insert(th);
            }
        }
        TypeTerm::Null => {}
        TypeTerm::Arrow(_, t1, t2) => {
            walk_formula(defs, a, th.flip(), &t1.0, out);
            walk_formula(defs, a, th, &t2.0, out);
        }
        TypeTerm::Ctor(c, ts) => {
            let variances: Vec<Variance> = match defs.get(c) {
                Some(d) => d.params.iter().map(|p| p.variance).collect(),
                None => vec![Variance::Inv; ts.len()],
            };
            for (t, v) in ts.iter().zip(variances) {
                match v {
                    Variance::Co => walk_formula(defs, a, th, &t.0, out),
                    Variance::Contra => walk_formula(defs, a, th.flip(), &t.0, out),
                    Variance::Inv => {
                        walk_formula(defs, a, Polarity::Pos, &t.0, out);
                        walk_formula(defs, a, Polarity::Neg, &t.0, out);
                    }
                }
            }
        }
    }
}

pub fn variance_ok(v: Variance, poles: &BTreeSet<Polarity>) -> bool {
    match v {
        Variance::Co => poles.iter().all(|p| *p == Polarity::Pos),
        Variance::Contra => poles.iter().all(|p| *p == Polarity::Neg),
        Variance::Inv => true,
    }
}

fn count_marks_formula(p: &Formula, out: &mut BTreeMap<Name, usize>) {
    let mut terms = Vec::new();
    p.top_type_terms(&mut terms);
    for u in &terms {
        count_marks_term(u, out);
    }
}

fn count_marks_term(u: &TypeTerm, out: &mut BTreeMap<Name, usize>) {
    match u {
        TypeTerm::TyVar(a, true) => *out.entry(a.clone()).or_default() += 1,
        TypeTerm::TyVar(_, false) | TypeTerm::Null => {}
        TypeTerm::Arrow(_, t1, t2) => {
            count_marks_formula(&t1.0, out);
            count_marks_formula(&t2.0, out);
        }
        TypeTerm::Ctor(_, ts) => ts.iter().for_each(|t| count_marks_formula(&t.0, out)),
    }
}

/// Checks a datatype definition: field well-formedness, declared variances and the marking discipline.
/// `defs` must already contain `d` so that recursive occurrences resolve.
pub fn check_typedef(defs: &DefEnv, d: &DatatypeDef) -> Result<(), WfError> {
    let mut seen = BTreeSet::new();
    for p in &d.params {
        if !seen.insert(&p.name) {
            return Err(WfError::Duplicate {
                ctor: d.name.clone(),
                what: "parameter",
                name: p.name.clone(),
            });
        }
    }
    let mut seen = BTreeSet::new();
    for (f, _) in &d.fields {
        if !seen.insert(f) {
            return Err(WfError::Duplicate {
                ctor: d.name.clone(),
                what: "field",
                name: f.clone(),
            });
        }
    }
    let mut scope = Scope {
        defs,
        vars: Vec::new(),
        tyvars: d.params.iter().map(|p| p.name.clone()).collect(),
    };
    for (_, t) in &d.fields {
        scope.reftype(t)?;
    }
    for p in &d.params {
        let mut poles = BTreeSet::new();
        for (_, t) in &d.fields {
            walk_formula(defs, &p.name, Polarity::Pos, &t.0, &mut poles);
        }
        if !variance_ok(p.variance, &poles) {
            return Err(WfError::Variance {
                ctor: d.name.clone(),
                param: p.name.clone(),
                variance: p.variance,
                poles,
            });
        }
    }
    let mut marks = BTreeMap::new();
    for (_, t) in &d.fields {
        count_marks_formula(&t.0, &mut marks);
    }
    for (a, n) in &marks {
        if *n > 1 {
            return Err(WfError::Marking {
                ctor: d.name.clone(),
                msg: format!("`{a}` is marked {n} times"),
            });
        }
        if !d.params.iter().any(|p| &p.name == a) {
            return Err(WfError::UnboundTyVar(a.clone()));
        }
    }
    if !marks.is_empty() && marks.len() != d.params.len() {
        return Err(WfError::Marking {
            ctor: d.name.clone(),
            msg: "either none or all parameters must be marked".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_formula, parse_type};

    fn g_x() -> TypeEnv {
        TypeEnv::new().bind("x", Scheme::mono(RefType::top()))
    }

    #[test]
    fn formula_scoping() {
        let defs = default_defs();
        let p = parse_formula("tag(x) = \"Int\"").unwrap();
        assert_eq!(
            check_formula(&defs, &TypeEnv::new(), &p),
            Err(WfError::Unbound("x".into()))
        );
        assert_eq!(check_formula(&defs, &g_x(), &p), Ok(()));
    }

    #[test]
    fn a_bare_term_is_not_a_proposition() {
        assert!(parse_formula("sel(x, \"f\")").is_err());
    }

    #[test]
    fn type_scoping() {
        let defs = default_defs();
        assert_eq!(
            check_type(&defs, &TypeEnv::new(), &Scheme::mono(RefType::top())),
            Ok(())
        );
        assert_eq!(
            check_type(&defs, &TypeEnv::new(), &Scheme::mono(RefType::tyvar("A"))),
            Err(WfError::UnboundTyVar("A".into()))
        );
        assert_eq!(
            check_type(
                &defs,
                &TypeEnv::new().tyvar("A"),
                &Scheme::mono(RefType::tyvar("A"))
            ),
            Ok(())
        );
        let foo = RefType::of_term(TypeTerm::Ctor("Foo".into(), vec![RefType::int()]));
        assert_eq!(
            check_type(&defs, &TypeEnv::new(), &Scheme::mono(foo)),
            Err(WfError::UnknownCtor("Foo".into()))
        );
        let dep = parse_type("x:Int -> {v | v = x}").unwrap();
        assert_eq!(check_type(&defs, &TypeEnv::new(), &dep), Ok(()));
        let forall = parse_type("forall A. A -> A").unwrap();
        assert_eq!(check_type(&defs, &TypeEnv::new(), &forall), Ok(()));
    }

    #[test]
    fn poles_examples() {
        let defs = default_defs();
        let arrow = parse_type("x:A -> Top").unwrap();
        let arrow = arrow.as_mono().unwrap();
        assert_eq!(
            poles_type(&defs, "A", Polarity::Pos, arrow),
            BTreeSet::from([Polarity::Neg])
        );
        assert_eq!(
            poles_type(&defs, "A", Polarity::Pos, &RefType::tyvar("A")),
            BTreeSet::from([Polarity::Pos])
        );
        let neg = Formula::not(Formula::has_type(
            LVal::Nu,
            TypeTerm::TyVar("A".into(), false),
        ));
        assert_eq!(
            poles_formula(&defs, "A", Polarity::Pos, &neg),
            BTreeSet::from([Polarity::Neg])
        );
        assert!(poles_type(&defs, "B", Polarity::Pos, &RefType::tyvar("A")).is_empty());
    }

    #[test]
    fn builtin_list_is_well_formed() {
        let defs = default_defs();
        assert_eq!(check_typedef(&defs, &DatatypeDef::builtin_list()), Ok(()));
    }

    fn typedef(src: &str) -> Result<(), WfError> {
        let prog = crate::frontend::parse(&format!("{src} 0")).unwrap();
        let (d, _) = prog.typedefs[0].clone();
        let mut defs = default_defs();
        defs.insert(d.name.clone(), d.clone());
        check_typedef(&defs, &d)
    }

    #[test]
    fn variance_checks() {
        assert!(matches!(
            typedef("type Bad[+A] { f: {v | v :: x:{v | v :: A} -> Top} }"),
            Err(WfError::Variance { .. })
        ));
        assert_eq!(
            typedef("type Any[=A] { f: {v | v :: A}, g: {v | v :: x:{v | v :: A} -> Top} }"),
            Ok(())
        );
        assert_eq!(
            typedef("type Sink[-A] { put: {v | v :: x:{v | v :: A} -> Top} }"),
            Ok(())
        );
        assert_eq!(
            typedef("type Pair[+A, +B] { fst: {v | v :: A}, snd: {v | v :: B} }"),
            Ok(())
        );
    }

    #[test]
    fn marking_checks() {
        assert!(matches!(
            typedef("type P[+A, +B] { fst: {v | v :: *A}, snd: {v | v :: B} }"),
            Err(WfError::Marking { .. })
        ));
        assert!(matches!(
            typedef("type Q[+A] { a: {v | v :: *A}, b: {v | v :: *A} }"),
            Err(WfError::Marking { .. })
        ));
    }
}
