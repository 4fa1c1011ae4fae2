//! Clause normalization, embedding, boxing, axiom instantiation and ground evaluation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::constants::{const_type, tag_of};
use crate::env::{EnvEntry, TypeEnv};
use crate::syntax::*;

pub const DEFAULT_CNF_CAP: usize = 4096;
pub const DEFAULT_INSTANCE_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LogicError {
    #[error("normalization produced more than {cap} clauses")]
    CnfBlowup { cap: usize },
    #[error("axiom instantiation produced more than {cap} instances")]
    InstantiationBlowup { cap: usize },
}

// ---------------------------------------------------------------------------
// Clauses

/// `q ⇛ lw₁::U₁ ∨ … ∨ lwₙ::Uₙ`; an empty consequent means `false`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    pub q: Formula,
    pub r: Vec<(LVal, TypeTerm)>,
}

impl Clause {
    pub fn consequent(&self) -> Formula {
        Formula::or(self.r.iter().map(|(lw, u)| Formula::HasType(lw.clone(), u.clone())).collect())
    }

    pub fn to_formula(&self) -> Formula {
        Formula::implies(self.q.clone(), self.consequent())
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} => {}", self.q, self.consequent())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Lit {
    pos: bool,
    atom: Formula,
}

/// Removes implications and equivalences and pushes negations down to atoms.
pub fn nnf(p: &Formula) -> Formula {
    to_nnf(p, true)
}

fn to_nnf(p: &Formula, pos: bool) -> Formula {
    match p {
        Formula::True => if pos { Formula::True } else { Formula::False },
        Formula::False => if pos { Formula::False } else { Formula::True },
        Formula::Pred(..) | Formula::HasType(..) => {
            if pos {
                p.clone()
            } else {
                Formula::not(p.clone())
            }
        }
        Formula::Not(q) => to_nnf(q, !pos),
        Formula::And(ps) => {
            let qs = ps.iter().map(|q| to_nnf(q, pos)).collect();
            if pos { Formula::and(qs) } else { Formula::or(qs) }
        }
        Formula::Or(ps) => {
            let qs = ps.iter().map(|q| to_nnf(q, pos)).collect();
            if pos { Formula::or(qs) } else { Formula::and(qs) }
        }
        Formula::Implies(a, b) => {
            to_nnf(&Formula::Or(vec![Formula::not((**a).clone()), (**b).clone()]), pos)
        }
        Formula::Iff(a, b) => {
            let fwd = Formula::Or(vec![Formula::not((**a).clone()), (**b).clone()]);
            let bwd = Formula::Or(vec![(**a).clone(), Formula::not((**b).clone())]);
            to_nnf(&Formula::And(vec![fwd, bwd]), pos)
        }
    }
}

fn cnf(p: &Formula, cap: usize) -> Result<Vec<Vec<Lit>>, LogicError> {
    match p {
        Formula::True => Ok(vec![]),
        Formula::False => Ok(vec![vec![]]),
        Formula::Pred(..) | Formula::HasType(..) => Ok(vec![vec![Lit { pos: true, atom: p.clone() }]]),
        Formula::Not(q) => Ok(vec![vec![Lit { pos: false, atom: (**q).clone() }]]),
        Formula::And(ps) => {
            let mut out = Vec::new();
            for q in ps {
                out.extend(cnf(q, cap)?);
                if out.len() > cap {
                    return Err(LogicError::CnfBlowup { cap });
                }
            }
            Ok(out)
        }
        Formula::Or(ps) => {
            let mut acc: Vec<Vec<Lit>> = vec![vec![]];
            for q in ps {
                let cq = cnf(q, cap)?;
                if acc.len().saturating_mul(cq.len()) > cap {
                    return Err(LogicError::CnfBlowup { cap });
                }
                let mut next = Vec::with_capacity(acc.len() * cq.len());
                for a in &acc {
                    for c in &cq {
                        let mut clause = a.clone();
                        clause.extend(c.iter().cloned());
                        next.push(clause);
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
        Formula::Implies(..) | Formula::Iff(..) => cnf(&nnf(p), cap),
    }
}

pub fn normalize(p: &Formula) -> Result<Vec<Clause>, LogicError> {
    normalize_with_cap(p, DEFAULT_CNF_CAP)
}

/// Rewrites `p` into an equivalent conjunction of clauses.
pub fn normalize_with_cap(p: &Formula, cap: usize) -> Result<Vec<Clause>, LogicError> {
    let mut out: Vec<Clause> = Vec::new();
    for mut lits in cnf(&nnf(p), cap)? {
        lits.sort();
        lits.dedup();
        let tautology = lits
            .iter()
            .any(|l| l.pos && lits.iter().any(|m| !m.pos && m.atom == l.atom));
        if tautology {
            continue;
        }
        let mut q = Vec::new();
        let mut r = Vec::new();
        for l in lits {
            match (l.pos, l.atom) {
                (true, Formula::HasType(lw, u)) => r.push((lw, u)),
                (true, atom) => q.push(Formula::not(atom)),
                (false, atom) => q.push(atom),
            }
        }
        let c = Clause { q: Formula::and(q), r };
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Embedding

/// `⟦S⟧`; polymorphic schemes embed to `true`.
pub fn embed_type(s: &Scheme) -> Formula {
    match s {
        Scheme::Mono(t) => t.0.clone(),
        Scheme::Forall(..) => Formula::True,
    }
}

/// `⟦T⟧(lw)`.
pub fn embed_at(t: &RefType, lw: &LVal) -> Formula {
    t.0.subst_nu(lw)
}

pub fn embed_entry(e: &EnvEntry) -> Formula {
    match e {
        EnvEntry::Bind(x, Scheme::Mono(t)) => embed_at(t, &LVal::var(x)),
        EnvEntry::Bind(_, Scheme::Forall(..)) | EnvEntry::TyVar(_) => Formula::True,
        EnvEntry::Guard(p) => p.clone(),
    }
}

pub fn embed_env(g: &TypeEnv) -> Formula {
    Formula::and(g.entries().iter().map(embed_entry).collect())
}

// ---------------------------------------------------------------------------
// Boxing

/// Maps alpha-equivalent type terms to one opaque identifier.
#[derive(Clone, Debug, Default)]
pub struct BoxTable {
    ids: HashMap<TypeTerm, usize>,
    terms: Vec<TypeTerm>,
}

impl BoxTable {
    pub fn new() -> BoxTable {
        BoxTable::default()
    }

    pub fn box_id(&mut self, u: &TypeTerm) -> usize {
        let key = alpha_canonical(u);
        if let Some(id) = self.ids.get(&key) {
            return *id;
        }
        let id = self.terms.len();
        self.terms.push(u.clone());
        self.ids.insert(key, id);
        id
    }

    pub fn lookup(&self, u: &TypeTerm) -> Option<usize> {
        self.ids.get(&alpha_canonical(u)).copied()
    }

    /// The first term boxed under `id`.
    pub fn term(&self, id: usize) -> &TypeTerm {
        &self.terms[id]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Ground terms and axiom instances

/// The logical terms of a query that axioms are instantiated over.
#[derive(Clone, Debug, Default)]
pub struct Terms {
    pub terms: BTreeSet<LVal>,
    pub keys: BTreeSet<LVal>,
    pub eqmods: BTreeSet<(LVal, LVal, LVal)>,
}

impl Terms {
    pub fn collect(ps: &[&Formula]) -> Terms {
        let mut t = Terms::default();
        for p in ps {
            t.formula(p);
        }
        t
    }

    pub fn add_formula(&mut self, p: &Formula) {
        self.formula(p);
    }

    fn formula(&mut self, p: &Formula) {
        match p {
            Formula::True | Formula::False => {}
            Formula::Pred(pr, args) => {
                args.iter().for_each(|a| self.lval(a));
                match pr {
                    Pred::Has => {
                        self.keys.insert(args[1].clone());
                    }
                    Pred::EqMod => {
                        self.keys.insert(args[2].clone());
                        self.eqmods.insert((args[0].clone(), args[1].clone(), args[2].clone()));
                    }
                    _ => {}
                }
            }
            Formula::HasType(lw, _) => self.lval(lw),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|q| self.formula(q)),
            Formula::Not(q) => self.formula(q),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                self.formula(a);
                self.formula(b);
            }
        }
    }

    fn lval(&mut self, lw: &LVal) {
        if lw.mentions_nu() {
            if let LVal::App(_, args) = lw {
                args.iter().for_each(|a| self.lval(a));
            }
            return;
        }
        if !self.terms.insert(lw.clone()) {
            return;
        }
        match lw {
            LVal::Nu => {}
            LVal::Val(w) => {
                if let Value::Const(Const::Str(_)) = w {
                    self.keys.insert(lw.clone());
                }
                if let Value::Extend(d, k, v) = w {
                    self.lval(&LVal::Val((**d).clone()));
                    self.lval(&LVal::Val((**k).clone()));
                    self.lval(&LVal::Val((**v).clone()));
                    self.keys.insert(LVal::Val((**k).clone()));
                }
            }
            LVal::App(f, args) => {
                args.iter().for_each(|a| self.lval(a));
                if *f == Func::Sel {
                    self.keys.insert(args[1].clone());
                }
            }
        }
    }
}

/// Ground instances of the dictionary axioms, the tag table, the boolean-values assumption and the
/// valid constant types, over the terms of one query.
pub fn instantiate_axioms(terms: &Terms, cap: usize) -> Result<Vec<Formula>, LogicError> {
    let mut out = Vec::new();
    let push = |out: &mut Vec<Formula>, p: Formula| -> Result<(), LogicError> {
        out.push(p);
        if out.len() > cap {
            Err(LogicError::InstantiationBlowup { cap })
        } else {
            Ok(())
        }
    };
    let mut eqmods = terms.eqmods.clone();
    for t in &terms.terms {
        match t {
            LVal::Val(Value::Const(Const::EmptyDict)) => {
                for k in &terms.keys {
                    push(&mut out, Formula::not(Formula::has(t.clone(), k.clone())))?;
                }
            }
            LVal::Val(Value::Extend(d, k, v)) => {
                let (d, k, v) = (LVal::Val((**d).clone()), LVal::Val((**k).clone()), LVal::Val((**v).clone()));
                push(&mut out, Formula::has(t.clone(), k.clone()))?;
                push(&mut out, Formula::eq(LVal::sel(t.clone(), k.clone()), v))?;
                push(&mut out, Formula::eqmod(t.clone(), d.clone(), k.clone()))?;
                eqmods.insert((t.clone(), d, k));
            }
            _ => {}
        }
        match t {
            LVal::Val(w) => {
                if let Some(tag) = tag_of(w) {
                    push(&mut out, Formula::tag_is(t.clone(), tag))?;
                }
                if let Value::Const(c @ (Const::Prim(_) | Const::Null)) = w {
                    if let Scheme::Mono(ty) = const_type(c) {
                        push(&mut out, embed_at(&ty, t))?;
                    }
                }
                if matches!(w, Value::Var(_)) {
                    push(&mut out, boolean_values(t))?;
                }
            }
            LVal::App(Func::Sel, _) => push(&mut out, boolean_values(t))?,
            _ => {}
        }
    }
    for (x, y, k) in &eqmods {
        for k2 in &terms.keys {
            if k2 == k {
                continue;
            }
            let ne = Formula::ne(k.clone(), k2.clone());
            push(
                &mut out,
                Formula::implies(
                    Formula::and(vec![Formula::eqmod(x.clone(), y.clone(), k.clone()), ne.clone()]),
                    Formula::iff(Formula::has(x.clone(), k2.clone()), Formula::has(y.clone(), k2.clone())),
                ),
            )?;
            push(
                &mut out,
                Formula::implies(
                    Formula::and(vec![Formula::eqmod(x.clone(), y.clone(), k.clone()), ne]),
                    Formula::eq(LVal::sel(x.clone(), k2.clone()), LVal::sel(y.clone(), k2.clone())),
                ),
            )?;
        }
    }
    Ok(out)
}

/// `tag(t) = "Bool" ⇒ t = true ∨ t = false`.
fn boolean_values(t: &LVal) -> Formula {
    Formula::implies(
        Formula::tag_is(t.clone(), "Bool"),
        Formula::or(vec![Formula::eq(t.clone(), LVal::bool(true)), Formula::eq(t.clone(), LVal::bool(false))]),
    )
}

// ---------------------------------------------------------------------------
// Ground evaluation

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Stuck,
}

impl From<bool> for Truth {
    fn from(b: bool) -> Truth {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

/// A concrete assignment of closed values to variables.
#[derive(Clone, Debug, Default)]
pub struct GroundModel {
    pub vars: BTreeMap<Name, Value>,
    pub defs: DefEnv,
}

impl GroundModel {
    pub fn new(defs: DefEnv) -> GroundModel {
        GroundModel { vars: BTreeMap::new(), defs }
    }

    pub fn with(mut self, x: &str, w: Value) -> GroundModel {
        self.vars.insert(x.to_string(), w);
        self
    }
}

/// A ground logical value: a closed value, or the unspecified result of selecting an absent key.
#[derive(Clone, Debug)]
enum G {
    V(Value),
    Absent,
}

/// The bindings of a closed dictionary value, outermost extension first.
pub fn dict_entries(w: &Value, defs: &DefEnv) -> Option<Vec<(String, Value)>> {
    match w {
        Value::Const(Const::EmptyDict) => Some(Vec::new()),
        Value::Extend(d, k, v) => {
            let Value::Const(Const::Str(k)) = &**k else { return None };
            let mut inner = dict_entries(d, defs)?;
            inner.retain(|(k2, _)| k2 != k);
            inner.insert(0, (k.clone(), (**v).clone()));
            Some(inner)
        }
        Value::New(c, _, args) => {
            let def = defs.get(c)?;
            if def.fields.len() != args.len() {
                return None;
            }
            Some(def.fields.iter().zip(args).map(|((f, _), a)| (f.clone(), a.clone())).collect())
        }
        _ => None,
    }
}

/// Equality of closed values: dictionaries extensionally, functions up to alpha-equivalence.
pub fn values_equal(a: &Value, b: &Value, defs: &DefEnv) -> bool {
    let a_dict = matches!(a, Value::Const(Const::EmptyDict) | Value::Extend(..));
    let b_dict = matches!(b, Value::Const(Const::EmptyDict) | Value::Extend(..));
    match (a, b) {
        _ if a_dict && b_dict => match (dict_entries(a, defs), dict_entries(b, defs)) {
            (Some(da), Some(db)) => {
                da.len() == db.len()
                    && da.iter().all(|(k, v)| db.iter().any(|(k2, v2)| k == k2 && values_equal(v, v2, defs)))
            }
            _ => a == b,
        },
        (Value::New(c1, _, a1), Value::New(c2, _, a2)) => {
            c1 == c2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| values_equal(x, y, defs))
        }
        (Value::Fun(..) | Value::TFun(..), Value::Fun(..) | Value::TFun(..)) => {
            alpha_canonical_value(&erase_value(a)) == alpha_canonical_value(&erase_value(b))
        }
        _ => a == b,
    }
}

fn resolve(w: &Value, m: &GroundModel) -> Option<Value> {
    let mut out = w.clone();
    for x in w.free_vars() {
        let v = m.vars.get(&x)?;
        out = out.subst(&x, v);
    }
    Some(out)
}

fn eval_lval(lw: &LVal, m: &GroundModel) -> Option<G> {
    match lw {
        LVal::Nu => None,
        LVal::Val(w) => resolve(w, m).map(G::V),
        LVal::App(f, args) => {
            let vs = args.iter().map(|a| eval_lval(a, m)).collect::<Option<Vec<_>>>()?;
            match (f, vs.as_slice()) {
                (Func::Tag, [G::V(w)]) => tag_of(w).map(|t| G::V(Value::str(t))),
                (Func::Sel, [G::V(d), G::V(Value::Const(Const::Str(k)))]) => {
                    let entries = dict_entries(d, &m.defs)?;
                    Some(match entries.into_iter().find(|(k2, _)| k2 == k) {
                        Some((_, v)) => G::V(v),
                        None => G::Absent,
                    })
                }
                (Func::Plus, [G::V(Value::Const(Const::Int(a))), G::V(Value::Const(Const::Int(b)))]) => {
                    a.checked_add(*b).map(|n| G::V(Value::int(n)))
                }
                (Func::Minus, [G::V(Value::Const(Const::Int(a))), G::V(Value::Const(Const::Int(b)))]) => {
                    a.checked_sub(*b).map(|n| G::V(Value::int(n)))
                }
                _ => None,
            }
        }
    }
}

fn g_equal(a: &G, b: &G, defs: &DefEnv) -> bool {
    match (a, b) {
        (G::V(x), G::V(y)) => values_equal(x, y, defs),
        (G::Absent, G::Absent) => true,
        _ => false,
    }
}

fn eval_pred(pr: Pred, args: &[LVal], m: &GroundModel) -> Option<bool> {
    let vs = args.iter().map(|a| eval_lval(a, m)).collect::<Option<Vec<_>>>()?;
    let int = |g: &G| match g {
        G::V(Value::Const(Const::Int(n))) => Some(*n),
        _ => None,
    };
    match (pr, vs.as_slice()) {
        (Pred::Eq, [a, b]) => Some(g_equal(a, b, &m.defs)),
        (Pred::Has, [G::V(d), G::V(Value::Const(Const::Str(k)))]) => {
            Some(dict_entries(d, &m.defs)?.iter().any(|(k2, _)| k2 == k))
        }
        (Pred::EqMod, [G::V(a), G::V(b), G::V(Value::Const(Const::Str(k)))]) => {
            let da = dict_entries(a, &m.defs)?;
            let db = dict_entries(b, &m.defs)?;
            let rest = |d: &[(String, Value)]| d.iter().filter(|(k2, _)| k2 != k).cloned().collect::<Vec<_>>();
            let (ra, rb) = (rest(&da), rest(&db));
            Some(
                ra.len() == rb.len()
                    && ra.iter().all(|(k1, v1)| rb.iter().any(|(k2, v2)| k1 == k2 && values_equal(v1, v2, &m.defs))),
            )
        }
        (Pred::Lt, [a, b]) => Some(int(a)? < int(b)?),
        (Pred::Le, [a, b]) => Some(int(a)? <= int(b)?),
        _ => None,
    }
}

/// Evaluates a has-type-free formula under a concrete model.
pub fn eval_ground(p: &Formula, m: &GroundModel) -> Truth {
    match p {
        Formula::True => Truth::True,
        Formula::False => Truth::False,
        Formula::Pred(pr, args) => eval_pred(*pr, args, m).map_or(Truth::Stuck, Truth::from),
        Formula::HasType(..) => Truth::Stuck,
        Formula::Not(q) => match eval_ground(q, m) {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Stuck => Truth::Stuck,
        },
        Formula::And(ps) => {
            let rs: Vec<Truth> = ps.iter().map(|q| eval_ground(q, m)).collect();
            if rs.contains(&Truth::False) {
                Truth::False
            } else if rs.contains(&Truth::Stuck) {
                Truth::Stuck
            } else {
                Truth::True
            }
        }
        Formula::Or(ps) => {
            let rs: Vec<Truth> = ps.iter().map(|q| eval_ground(q, m)).collect();
            if rs.contains(&Truth::True) {
                Truth::True
            } else if rs.contains(&Truth::Stuck) {
                Truth::Stuck
            } else {
                Truth::False
            }
        }
        Formula::Implies(a, b) => match (eval_ground(a, m), eval_ground(b, m)) {
            (Truth::False, _) | (_, Truth::True) => Truth::True,
            (Truth::True, Truth::False) => Truth::False,
            _ => Truth::Stuck,
        },
        Formula::Iff(a, b) => match (eval_ground(a, m), eval_ground(b, m)) {
            (Truth::Stuck, _) | (_, Truth::Stuck) => Truth::Stuck,
            (x, y) => Truth::from(x == y),
        },
    }
}
