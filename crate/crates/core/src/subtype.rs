//! Algorithmic subtyping, clause implication, syntactic subtyping and type extraction.

use std::collections::BTreeSet;
use std::fmt;

use crate::datatype::{field_presence, lookup, unfold_formula, DataError};
use crate::env::TypeEnv;
use crate::logic::{embed_env, normalize, Clause, LogicError};
use crate::smt::{Session, SmtError, Verdict};
use crate::syntax::*;

/// Type terms already extracted along the current derivation branch, in alpha-canonical form.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UsedSet(BTreeSet<TypeTerm>);

impl UsedSet {
    pub fn new() -> UsedSet {
        UsedSet::default()
    }

    pub fn contains(&self, u: &TypeTerm) -> bool {
        self.0.contains(&alpha_canonical(u))
    }

    pub fn with(&self, us: &[TypeTerm]) -> UsedSet {
        let mut out = self.clone();
        out.0.extend(us.iter().map(alpha_canonical));
        out
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SubError {
    #[error("cannot prove {clause}")]
    Clause { clause: Clause, candidates: Vec<TypeTerm> },
    #[error("{left} is not a syntactic subtype of {right}")]
    Shape { rule: &'static str, left: TypeTerm, right: TypeTerm },
    #[error("cannot relate {left} and {right}")]
    Scheme { left: Scheme, right: Scheme },
    #[error("subtyping gave up after {0} extraction steps")]
    Fuel(usize),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Smt(#[from] SmtError),
}

impl SubError {
    /// Name of the rule whose premise failed.
    pub fn rule(&self) -> &'static str {
        match self {
            SubError::Clause { .. } => "CA-ImpSyn",
            SubError::Shape { rule, .. } => rule,
            SubError::Scheme { .. } => "SA-Poly",
            SubError::Fuel(_) => "CA-ImpSyn",
            SubError::Data(_) | SubError::Logic(_) | SubError::Smt(_) => "plumbing",
        }
    }

    /// True for errors that are not a verdict about the program.
    pub fn is_fatal(&self) -> bool {
        matches!(self, SubError::Smt(_) | SubError::Logic(_))
    }
}

pub type SubResult<T> = Result<T, SubError>;

/// `TypeTerms(Γ)`: the top-level type terms of the bindings and guards of `g`.
pub fn type_terms(g: &TypeEnv) -> Vec<TypeTerm> {
    let mut out = Vec::new();
    for e in g.entries() {
        match e {
            crate::env::EnvEntry::Bind(_, Scheme::Mono(t)) => t.0.top_type_terms(&mut out),
            crate::env::EnvEntry::Guard(p) => p.top_type_terms(&mut out),
            _ => {}
        }
    }
    dedup_alpha(out)
}

fn dedup_alpha(us: Vec<TypeTerm>) -> Vec<TypeTerm> {
    let mut seen = BTreeSet::new();
    us.into_iter().filter(|u| seen.insert(alpha_canonical(u))).collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EngineStats {
    pub must_flow_calls: usize,
    pub extractions: usize,
}

/// Shared state of the subtyping procedures: the solver session, the datatype definitions and a
/// supply of fresh names.
pub struct Engine {
    pub session: Session,
    pub defs: DefEnv,
    fresh: usize,
    /// The used-set termination guard; only tests turn it off.
    pub guard: bool,
    /// Upper bound on `CA-ImpSyn` steps per top-level query.
    pub fuel: usize,
    spent: usize,
    pub stats: EngineStats,
}

pub const DEFAULT_FUEL: usize = 5_000;

impl Engine {
    pub fn new(session: Session, defs: DefEnv) -> Engine {
        Engine {
            session,
            defs,
            fresh: 0,
            guard: true,
            fuel: DEFAULT_FUEL,
            spent: 0,
            stats: EngineStats::default(),
        }
    }

    pub fn fresh(&mut self) -> Name {
        self.fresh += 1;
        format!("%f{}", self.fresh)
    }

    fn valid(&mut self, hyps: &[Formula], goal: &Formula) -> SubResult<bool> {
        Ok(self.session.check_valid(hyps, goal)? == Verdict::Valid)
    }

    pub fn inconsistent(&mut self, g: &TypeEnv) -> SubResult<bool> {
        self.valid(&[embed_env(g)], &Formula::False)
    }

    /// `MustFlow(Γ, T, 𝒰)`, with the candidates optionally restricted by `keep`.
    pub fn must_flow_filtered(
        &mut self,
        g: &TypeEnv,
        t: &RefType,
        used: &UsedSet,
        keep: impl Fn(&TypeTerm) -> bool,
    ) -> SubResult<Vec<TypeTerm>> {
        self.stats.must_flow_calls += 1;
        let mut cands = type_terms(g);
        t.0.top_type_terms(&mut cands);
        let mut cands: Vec<TypeTerm> = dedup_alpha(cands)
            .into_iter()
            .filter(|u| (!self.guard || !used.contains(u)) && keep(u))
            .collect();
        if cands.is_empty() {
            return Ok(cands);
        }
        cands.sort_by_key(|u| self.session.boxes.box_id(u));
        let x = self.fresh();
        let hyp = embed_env(&g.bind(&x, Scheme::Mono(t.clone())));
        let mut out = Vec::new();
        for u in cands {
            let goal = Formula::HasType(LVal::var(&x), u.clone());
            if self.valid(std::slice::from_ref(&hyp), &goal)? {
                out.push(u);
            }
        }
        Ok(out)
    }

    pub fn must_flow(&mut self, g: &TypeEnv, t: &RefType, used: &UsedSet) -> SubResult<Vec<TypeTerm>> {
        self.must_flow_filtered(g, t, used, |_| true)
    }

    /// `Extend(Γ, x, S)`: binds `x` and records the unfolding of every datatype that flows to it.
    pub fn extend(&mut self, g: &TypeEnv, x: &str, s: &Scheme) -> SubResult<TypeEnv> {
        let g1 = g.bind(x, s.clone());
        if s.as_mono().is_none() {
            return Ok(g1);
        }
        let ctors = self.must_flow_filtered(
            &g1,
            &RefType::singleton(LVal::var(x)),
            &UsedSet::new(),
            |u| matches!(u, TypeTerm::Ctor(..)),
        )?;
        let mut facts = Vec::new();
        for u in ctors {
            if let TypeTerm::Ctor(c, targs) = u {
                facts.push(unfold_formula(&self.defs, &c, &targs)?.subst_nu(&LVal::var(x)));
                facts.push(field_presence(&self.defs, &c)?.subst_nu(&LVal::var(x)));
            }
        }
        Ok(g1.guard(Formula::and(facts)))
    }

    /// Resets the per-query fuel counter.
    pub fn refuel(&mut self) {
        self.spent = 0;
    }

    /// `Γ ⊢ S₁ <: S₂` with an empty used set.
    pub fn subtype(&mut self, g: &TypeEnv, s1: &Scheme, s2: &Scheme) -> SubResult<()> {
        self.refuel();
        self.sub(g, s1, s2, &UsedSet::new())
    }

    /// `SA-Mono` and `SA-Poly`.
    pub fn sub(&mut self, g: &TypeEnv, s1: &Scheme, s2: &Scheme, used: &UsedSet) -> SubResult<()> {
        match (s1, s2) {
            (Scheme::Mono(t1), Scheme::Mono(t2)) => {
                let x = LVal::var(&self.fresh());
                let p1 = t1.0.subst_nu(&x);
                let p2 = t2.0.subst_nu(&x);
                let g1 = g.guard(p1);
                for c in normalize(&p2)? {
                    self.imp(&g1, &c, used)?;
                }
                Ok(())
            }
            (Scheme::Forall(a, b1), Scheme::Forall(b, b2)) => {
                let b2 = if a == b { (**b2).clone() } else { b2.rename_tyvar(b, a) };
                self.sub(&g.tyvar(a), b1, &b2, used)
            }
            _ => Err(SubError::Scheme { left: s1.clone(), right: s2.clone() }),
        }
    }

    /// `CA-Valid`, then `CA-ImpSyn`.
    pub fn imp(&mut self, g: &TypeEnv, c: &Clause, used: &UsedSet) -> SubResult<()> {
        let hyps = [embed_env(g), c.q.clone()];
        if self.valid(&hyps, &c.consequent())? {
            return Ok(());
        }
        let gq = g.guard(c.q.clone());
        let mut tried = Vec::new();
        for (lw, uj) in &c.r {
            self.spent += 1;
            if self.spent > self.fuel {
                return Err(SubError::Fuel(self.fuel));
            }
            let flows = self.must_flow(&gq, &RefType::singleton(lw.clone()), used)?;
            self.stats.extractions += flows.len();
            let used2 = if self.guard { used.with(&flows) } else { used.clone() };
            for u in &flows {
                match self.syn_sub(&gq, u, uj, &used2) {
                    Ok(()) => return Ok(()),
                    Err(e) if e.is_fatal() || matches!(e, SubError::Fuel(_)) => return Err(e),
                    Err(_) => {}
                }
            }
            tried.extend(flows);
        }
        Err(SubError::Clause { clause: c.clone(), candidates: dedup_alpha(tried) })
    }

    /// `UA-Arrow`, `UA-Var`, `UA-Null` and `UA-Datatype`.
    pub fn syn_sub(&mut self, g: &TypeEnv, u1: &TypeTerm, u2: &TypeTerm, used: &UsedSet) -> SubResult<()> {
        match (u1, u2) {
            (TypeTerm::Arrow(x1, t11, t12), TypeTerm::Arrow(x2, t21, t22)) => {
                self.sub(g, &Scheme::Mono((**t21).clone()), &Scheme::Mono((**t11).clone()), used)?;
                let z = self.fresh();
                let zv = Value::var(&z);
                let t12 = t12.subst(x1, &zv);
                let t22 = t22.subst(x2, &zv);
                let g1 = self.extend(g, &z, &Scheme::Mono(t21.subst(x2, &zv)))?;
                self.sub(&g1, &Scheme::Mono(t12), &Scheme::Mono(t22), used)
            }
            (TypeTerm::TyVar(a, _), TypeTerm::TyVar(b, _)) if a == b => Ok(()),
            (TypeTerm::Null, TypeTerm::Ctor(..)) => Ok(()),
            (TypeTerm::Ctor(c1, ts1), TypeTerm::Ctor(c2, ts2)) if c1 == c2 && ts1.len() == ts2.len() => {
                let params = lookup(&self.defs, c1)?.params.clone();
                for ((p, a), b) in params.iter().zip(ts1).zip(ts2) {
                    let (a, b) = (Scheme::Mono(a.clone()), Scheme::Mono(b.clone()));
                    if matches!(p.variance, Variance::Co | Variance::Inv) {
                        self.sub(g, &a, &b, used)?;
                    }
                    if matches!(p.variance, Variance::Contra | Variance::Inv) {
                        self.sub(g, &b, &a, used)?;
                    }
                }
                Ok(())
            }
            _ => Err(SubError::Shape {
                rule: shape_rule(u1, u2),
                left: u1.clone(),
                right: u2.clone(),
            }),
        }
    }
}

fn shape_rule(u1: &TypeTerm, u2: &TypeTerm) -> &'static str {
    match (u1, u2) {
        (TypeTerm::Arrow(..), _) | (_, TypeTerm::Arrow(..)) => "UA-Arrow",
        (TypeTerm::TyVar(..), _) | (_, TypeTerm::TyVar(..)) => "UA-Var",
        (TypeTerm::Null, _) => "UA-Null",
        _ => "UA-Datatype",
    }
}

impl fmt::Display for UsedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(|u| u.to_string()).collect();
        write!(f, "{{{}}}", items.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_formula, parse_type};
    use crate::smt::SolverConfig;

    fn engine() -> Engine {
        Engine::new(Session::open(SolverConfig::default()).unwrap(), default_defs())
    }

    fn ty(s: &str) -> RefType {
        parse_type(s).unwrap().as_mono().unwrap().clone()
    }

    fn term(s: &str) -> TypeTerm {
        match ty(s).0 {
            Formula::HasType(LVal::Nu, u) => u,
            other => panic!("not a type term: {other}"),
        }
    }

    #[test]
    fn type_terms_are_top_level() {
        let g = TypeEnv::new().bind("f", Scheme::Mono(ty("{v | v = null \\/ v :: Int -> Int}")));
        assert_eq!(type_terms(&g), vec![term("Int -> Int")]);
        assert!(type_terms(&TypeEnv::new()).is_empty());
        let g = TypeEnv::new().bind("h", Scheme::Mono(ty("a:{v | v :: List[Int]} -> Top")));
        assert_eq!(type_terms(&g).len(), 1);
    }

    #[test]
    fn subtype_singleton_to_int() {
        let mut e = engine();
        let g = TypeEnv::new();
        assert!(e.subtype(&g, &Scheme::Mono(ty("{v | v = 42}")), &Scheme::Mono(ty("Int"))).is_ok());
        assert!(e.subtype(&g, &Scheme::Mono(ty("{v | v = true}")), &Scheme::Mono(ty("Int"))).is_err());
    }

    #[test]
    fn negation_result_is_iorb() {
        let mut e = engine();
        let g = TypeEnv::new()
            .bind("x", Scheme::Mono(ty("IorB")))
            .guard(parse_formula("tag(x) = \"Int\"").unwrap());
        let t = ty("{v | tag(v) = \"Int\" /\\ v = 0 - x}");
        assert!(e.subtype(&g, &Scheme::Mono(t), &Scheme::Mono(ty("IorB"))).is_ok());
    }

    #[test]
    fn syntactic_rules() {
        let mut e = engine();
        let g = TypeEnv::new();
        let u = UsedSet::new();
        assert!(e.syn_sub(&g, &TypeTerm::Null, &term("List[Int]"), &u).is_ok());
        assert!(e.syn_sub(&g, &TypeTerm::TyVar("A".into(), false), &TypeTerm::TyVar("B".into(), false), &u).is_err());
        let u0 = term("x:IorB -> {v | tag(v) = tag(x)}");
        assert!(e.syn_sub(&g, &u0, &term("Int -> Int"), &u).is_ok());
        assert!(e.syn_sub(&g, &term("Int -> Int"), &u0, &u).is_err());
        assert!(e.syn_sub(&g, &term("List[Int]"), &term("List[Top]"), &u).is_ok());
        assert!(e.syn_sub(&g, &term("List[Top]"), &term("List[Int]"), &u).is_err());
    }

    #[test]
    fn must_flow_extracts_arrow_under_guard() {
        let mut e = engine();
        let u1 = term("Int -> Int");
        let g = TypeEnv::new()
            .bind("f", Scheme::Mono(ty("{v | v = null \\/ v :: Int -> Int}")))
            .guard(parse_formula("not (f = null)").unwrap());
        let t = RefType::singleton(LVal::var("f"));
        assert_eq!(e.must_flow(&g, &t, &UsedSet::new()).unwrap(), vec![u1.clone()]);
        assert!(e.must_flow(&g, &t, &UsedSet::new().with(&[u1])).unwrap().is_empty());
    }

    fn loop_env() -> (TypeEnv, Clause) {
        let g = TypeEnv::new()
            .bind("y", Scheme::Mono(RefType::top()))
            .bind("x", Scheme::Mono(ty("{v | v = y /\\ v :: a:{v | v :: b:{v | v = y} -> Top} -> Top}")));
        let goal = term("x:{v | v = y} -> Top");
        (g, Clause { q: Formula::True, r: vec![(LVal::var("y"), goal)] })
    }

    #[test]
    fn guard_terminates_the_loop() {
        let mut e = engine();
        let (g, c) = loop_env();
        assert!(matches!(e.imp(&g, &c, &UsedSet::new()), Err(SubError::Clause { .. })));
    }

    #[test]
    fn loop_without_guard_runs_out_of_fuel() {
        let mut e = engine();
        e.guard = false;
        e.fuel = 50;
        let (g, c) = loop_env();
        assert!(matches!(e.imp(&g, &c, &UsedSet::new()), Err(SubError::Fuel(50))));
    }
}
