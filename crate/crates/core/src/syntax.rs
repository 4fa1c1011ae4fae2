//! Abstract syntax of the core calculus and of the refinement logic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Name = String;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prim {
    Plus,
    Minus,
    Eq,
    Not,
    Tag,
    Has,
    Get,
    Set,
    Keys,
    Fix,
    Mem,
}

impl Prim {
    pub const ALL: [Prim; 11] = [
        Prim::Plus,
        Prim::Minus,
        Prim::Eq,
        Prim::Not,
        Prim::Tag,
        Prim::Has,
        Prim::Get,
        Prim::Set,
        Prim::Keys,
        Prim::Fix,
        Prim::Mem,
    ];

    pub fn arity(self) -> usize {
        match self {
            Prim::Not | Prim::Tag | Prim::Keys | Prim::Fix => 1,
            Prim::Set => 3,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Prim::Plus => "+",
            Prim::Minus => "-",
            Prim::Eq => "=",
            Prim::Not => "not",
            Prim::Tag => "tag",
            Prim::Has => "has",
            Prim::Get => "get",
            Prim::Set => "set",
            Prim::Keys => "keys",
            Prim::Fix => "fix",
            Prim::Mem => "mem",
        }
    }

    /// Symbol-safe identifier used when the primitive appears in solver text.
    pub fn ident(self) -> &'static str {
        match self {
            Prim::Plus => "plus",
            Prim::Minus => "minus",
            Prim::Eq => "eq",
            other => other.name(),
        }
    }

    pub fn from_ident(s: &str) -> Option<Prim> {
        match s {
            "not" => Some(Prim::Not),
            "tag" => Some(Prim::Tag),
            "has" => Some(Prim::Has),
            "get" => Some(Prim::Get),
            "set" => Some(Prim::Set),
            "keys" => Some(Prim::Keys),
            "fix" => Some(Prim::Fix),
            "mem" => Some(Prim::Mem),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Const {
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
    EmptyDict,
    Prim(Prim),
    /// A curried primitive waiting for more arguments.
    Partial(Prim, Vec<Value>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Var(Name),
    Const(Const),
    Extend(Box<Value>, Box<Value>, Box<Value>),
    Fun(Name, Option<Box<RefType>>, Box<Expr>),
    TFun(Name, Box<Expr>),
    New(Name, Option<Vec<RefType>>, Vec<Value>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Val(Value),
    App(Value, Value),
    TApp(Value, RefType),
    If(Value, Box<Expr>, Box<Expr>),
    Let(Name, Option<Scheme>, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sel,
    Tag,
    Plus,
    Minus,
}

impl Func {
    pub fn arity(self) -> usize {
        match self {
            Func::Tag => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LVal {
    /// The value variable.
    Nu,
    Val(Value),
    App(Func, Vec<LVal>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    Eq,
    Has,
    EqMod,
    Lt,
    Le,
}

impl Pred {
    pub fn arity(self) -> usize {
        match self {
            Pred::EqMod => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Pred(Pred, Vec<LVal>),
    HasType(LVal, TypeTerm),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeTerm {
    Arrow(Name, Box<RefType>, Box<RefType>),
    /// A type variable; `marked` is set on the single marked occurrence in a datatype field.
    TyVar(Name, bool),
    Null,
    Ctor(Name, Vec<RefType>),
}

/// `{ν | p}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RefType(pub Formula);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Mono(RefType),
    Forall(Name, Box<Scheme>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variance {
    Co,
    Contra,
    Inv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeParam {
    pub variance: Variance,
    pub name: Name,
    pub marked: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatatypeDef {
    pub name: Name,
    pub params: Vec<TypeParam>,
    pub fields: Vec<(String, RefType)>,
}

impl DatatypeDef {
    /// `List[+A]{hd: {v | v::A}, tl: {v | v::List[*A]}}`.
    pub fn builtin_list() -> DatatypeDef {
        DatatypeDef {
            name: "List".into(),
            params: vec![TypeParam {
                variance: Variance::Co,
                name: "A".into(),
                marked: true,
            }],
            fields: vec![
                (
                    "hd".into(),
                    RefType::of_term(TypeTerm::TyVar("A".into(), false)),
                ),
                (
                    "tl".into(),
                    RefType::of_term(TypeTerm::Ctor(
                        "List".into(),
                        vec![RefType::of_term(TypeTerm::TyVar("A".into(), true))],
                    )),
                ),
            ],
        }
    }

    pub fn field_index(&self, f: &str) -> Option<usize> {
        self.fields.iter().position(|(n, _)| n == f)
    }
}

pub type DefEnv = BTreeMap<Name, DatatypeDef>;

pub fn default_defs() -> DefEnv {
    let mut d = DefEnv::new();
    let list = DatatypeDef::builtin_list();
    d.insert(list.name.clone(), list);
    d
}

// ---------------------------------------------------------------------------
// Constructors and shorthands

impl Value {
    pub fn var(x: &str) -> Value {
        Value::Var(x.to_string())
    }
    pub fn int(n: i64) -> Value {
        Value::Const(Const::Int(n))
    }
    pub fn bool(b: bool) -> Value {
        Value::Const(Const::Bool(b))
    }
    pub fn str(s: &str) -> Value {
        Value::Const(Const::Str(s.to_string()))
    }
    pub fn null() -> Value {
        Value::Const(Const::Null)
    }
    pub fn empty() -> Value {
        Value::Const(Const::EmptyDict)
    }
    pub fn prim(p: Prim) -> Value {
        Value::Const(Const::Prim(p))
    }
    pub fn extend(d: Value, k: Value, v: Value) -> Value {
        Value::Extend(Box::new(d), Box::new(k), Box::new(v))
    }
    pub fn fun(x: &str, ann: Option<RefType>, body: Expr) -> Value {
        Value::Fun(x.to_string(), ann.map(Box::new), Box::new(body))
    }
}

impl LVal {
    pub fn var(x: &str) -> LVal {
        LVal::Val(Value::var(x))
    }
    pub fn int(n: i64) -> LVal {
        LVal::Val(Value::int(n))
    }
    pub fn str(s: &str) -> LVal {
        LVal::Val(Value::str(s))
    }
    pub fn bool(b: bool) -> LVal {
        LVal::Val(Value::bool(b))
    }
    pub fn null() -> LVal {
        LVal::Val(Value::null())
    }
    pub fn tag(a: LVal) -> LVal {
        LVal::App(Func::Tag, vec![a])
    }
    pub fn sel(a: LVal, b: LVal) -> LVal {
        LVal::App(Func::Sel, vec![a, b])
    }
    pub fn plus(a: LVal, b: LVal) -> LVal {
        LVal::App(Func::Plus, vec![a, b])
    }
    pub fn minus(a: LVal, b: LVal) -> LVal {
        LVal::App(Func::Minus, vec![a, b])
    }
}

impl Formula {
    pub fn eq(a: LVal, b: LVal) -> Formula {
        Formula::Pred(Pred::Eq, vec![a, b])
    }
    pub fn ne(a: LVal, b: LVal) -> Formula {
        Formula::not(Formula::eq(a, b))
    }
    pub fn has(d: LVal, k: LVal) -> Formula {
        Formula::Pred(Pred::Has, vec![d, k])
    }
    pub fn eqmod(a: LVal, b: LVal, k: LVal) -> Formula {
        Formula::Pred(Pred::EqMod, vec![a, b, k])
    }
    pub fn has_type(lw: LVal, u: TypeTerm) -> Formula {
        Formula::HasType(lw, u)
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Formula) -> Formula {
        Formula::Not(Box::new(p))
    }
    pub fn implies(p: Formula, q: Formula) -> Formula {
        Formula::Implies(Box::new(p), Box::new(q))
    }
    pub fn iff(p: Formula, q: Formula) -> Formula {
        Formula::Iff(Box::new(p), Box::new(q))
    }
    /// Conjunction that flattens nested conjunctions and drops `true`.
    pub fn and(ps: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in ps {
            match p {
                Formula::True => {}
                Formula::And(qs) => out.extend(qs),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }
    pub fn or(ps: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in ps {
            match p {
                Formula::False => {}
                Formula::Or(qs) => out.extend(qs),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }
    /// `tag(lw) = "name"`.
    pub fn tag_is(lw: LVal, name: &str) -> Formula {
        Formula::eq(LVal::tag(lw), LVal::str(name))
    }
}

impl RefType {
    pub fn top() -> RefType {
        RefType(Formula::True)
    }
    pub fn bot() -> RefType {
        RefType(Formula::False)
    }
    pub fn of_term(u: TypeTerm) -> RefType {
        RefType(Formula::HasType(LVal::Nu, u))
    }
    pub fn tagged(name: &str) -> RefType {
        RefType(Formula::tag_is(LVal::Nu, name))
    }
    pub fn int() -> RefType {
        RefType::tagged("Int")
    }
    pub fn bool() -> RefType {
        RefType::tagged("Bool")
    }
    pub fn str() -> RefType {
        RefType::tagged("Str")
    }
    pub fn dict() -> RefType {
        RefType::tagged("Dict")
    }
    pub fn ior_b() -> RefType {
        RefType(Formula::Or(vec![
            Formula::tag_is(LVal::Nu, "Int"),
            Formula::tag_is(LVal::Nu, "Bool"),
        ]))
    }
    /// `{ν | ν = lw}`.
    pub fn singleton(lw: LVal) -> RefType {
        RefType(Formula::eq(LVal::Nu, lw))
    }
    pub fn arrow(x: &str, t1: RefType, t2: RefType) -> RefType {
        RefType::of_term(TypeTerm::Arrow(x.to_string(), Box::new(t1), Box::new(t2)))
    }
    pub fn list(t: RefType) -> RefType {
        RefType::of_term(TypeTerm::Ctor("List".into(), vec![t]))
    }
    pub fn tyvar(a: &str) -> RefType {
        RefType::of_term(TypeTerm::TyVar(a.to_string(), false))
    }

    /// The arrow when this type is syntactically `{ν | ν :: x:T1 → T2}`.
    pub fn as_arrow(&self) -> Option<(&Name, &RefType, &RefType)> {
        match &self.0 {
            Formula::HasType(LVal::Nu, TypeTerm::Arrow(x, t1, t2)) => Some((x, t1, t2)),
            _ => None,
        }
    }
}

impl Scheme {
    pub fn mono(t: RefType) -> Scheme {
        Scheme::Mono(t)
    }
    pub fn forall(vars: &[&str], body: Scheme) -> Scheme {
        vars.iter()
            .rev()
            .fold(body, |acc, a| Scheme::Forall(a.to_string(), Box::new(acc)))
    }
    pub fn as_mono(&self) -> Option<&RefType> {
        match self {
            Scheme::Mono(t) => Some(t),
            Scheme::Forall(..) => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Free variables

pub trait FreeVars {
    fn free_vars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>);

    fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut Vec::new(), &mut out);
        out
    }

    fn mentions(&self, x: &str) -> bool {
        self.free_vars().contains(x)
    }
}

fn note_var(x: &Name, bound: &[Name], out: &mut BTreeSet<Name>) {
    if !bound.iter().any(|b| b == x) {
        out.insert(x.clone());
    }
}

impl FreeVars for Value {
    fn free_vars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Value::Var(x) => note_var(x, bound, out),
            Value::Const(Const::Partial(_, args)) => {
                args.iter().for_each(|a| a.free_vars_into(bound, out))
            }
            Value::Const(_) => {}
            Value::Extend(a, b, c) => {
                a.free_vars_into(bound, out);
                b.free_vars_into(bound, out);
                c.free_vars_into(bound, out);
            }
            Value::Fun(x, ann, body) => {
                if let Some(t) = ann {
                    t.free_vars_into(bound, out);
                }
                bound.push(x.clone());
                body.free_vars_into(bound, out);
                bound.pop();
            }
            Value::TFun(_, body) => body.free_vars_into(bound, out),
            Value::New(_, targs, args) => {
                if let Some(ts) = targs {
                    ts.iter().for_each(|t| t.free_vars_into(bound, out));
                }
                args.iter().for_each(|a| a.free_vars_into(bound, out));
            }
        }
    }
}

impl FreeVars for Expr {
    fn free_vars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Expr::Val(w) => w.free_vars_into(bound, out),
            Expr::App(a, b) => {
                a.free_vars_into(bound, out);
                b.free_vars_into(bound, out);
            }
            Expr::TApp(w, t) => {
                w.free_vars_into(bound, out);
                t.free_vars_into(bound, out);
            }
            Expr::If(w, e1, e2) => {
                w.free_vars_into(bound, out);
                e1.free_vars_into(bound, out);
                e2.free_vars_into(bound, out);
            }
            Expr::Let(x, ann, e1, e2) => {
                if let Some(s) = ann {
                    s.free_vars_into(bound, out);
                }
                e1.free_vars_into(bound, out);
                bound.push(x.clone());
                e2.free_vars_into(bound, out);
                bound.pop();
            }
        }
    }
}

impl FreeVars for LVal {
    fn free_vars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            LVal::Nu => {}
            LVal::Val(w) => w.free_vars_into(bound, out),
            LVal::App(_, args) => args.iter().for_each(|a| a.free_vars_into(bound, out)),
        }
    }
}

impl FreeVars for Formula {
    fn free_vars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Pred(_, args) => args.iter().for_each(|a| a.free_vars_into(bound, out)),
            Formula::HasType(lw, u) => {
                lw.free_vars_into(bound, out);
                u.free_vars_into(bound, out);
            }
            Formula::And(ps) | Formula::Or(ps) => {
                ps.iter().for_each(|p| p.free_vars_into(bound, out))
            }
            Formula::Not(p) => p.free_vars_into(bound, out),
            Formula::Implies(p, q) | Formula::Iff(p, q) => {
                p.free_vars_into(bound, out);
                q.free_vars_into(bound, out);
            }
        }
    }
}

impl FreeVars for TypeTerm {
    fn free_vars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            TypeTerm::Arrow(x, t1, t2) => {
                t1.free_vars_into(bound, out);
                bound.push(x.clone());
                t2.free_vars_into(bound, out);
                bound.pop();
            }
            TypeTerm::TyVar(..) | TypeTerm::Null => {}
            TypeTerm::Ctor(_, ts) => ts.iter().for_each(|t| t.free_vars_into(bound, out)),
        }
    }
}

impl FreeVars for RefType {
    fn free_vars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        self.0.free_vars_into(bound, out)
    }
}

impl FreeVars for Scheme {
    fn free_vars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Scheme::Mono(t) => t.free_vars_into(bound, out),
            Scheme::Forall(_, s) => s.free_vars_into(bound, out),
        }
    }
}

/// Type variables occurring free in a type-level object.
pub trait FreeTyVars {
    fn free_tyvars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>);

    fn free_tyvars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.free_tyvars_into(&mut Vec::new(), &mut out);
        out
    }
}

impl FreeTyVars for Formula {
    fn free_tyvars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Formula::HasType(_, u) => u.free_tyvars_into(bound, out),
            Formula::And(ps) | Formula::Or(ps) => {
                ps.iter().for_each(|p| p.free_tyvars_into(bound, out))
            }
            Formula::Not(p) => p.free_tyvars_into(bound, out),
            Formula::Implies(p, q) | Formula::Iff(p, q) => {
                p.free_tyvars_into(bound, out);
                q.free_tyvars_into(bound, out);
            }
            _ => {}
        }
    }
}

impl FreeTyVars for TypeTerm {
    fn free_tyvars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            TypeTerm::Arrow(_, t1, t2) => {
                t1.free_tyvars_into(bound, out);
                t2.free_tyvars_into(bound, out);
            }
            TypeTerm::TyVar(a, _) => note_var(a, bound, out),
            TypeTerm::Null => {}
            TypeTerm::Ctor(_, ts) => ts.iter().for_each(|t| t.free_tyvars_into(bound, out)),
        }
    }
}

impl FreeTyVars for RefType {
    fn free_tyvars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        self.0.free_tyvars_into(bound, out)
    }
}

impl FreeTyVars for Scheme {
    fn free_tyvars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Scheme::Mono(t) => t.free_tyvars_into(bound, out),
            Scheme::Forall(a, s) => {
                bound.push(a.clone());
                s.free_tyvars_into(bound, out);
                bound.pop();
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Substitution of values for variables

/// Picks a variant of `x` that avoids every name in `avoid`.
pub fn freshen(x: &str, avoid: &BTreeSet<Name>) -> Name {
    let mut candidate = format!("{x}'");
    while avoid.contains(&candidate) {
        candidate.push('\'');
    }
    candidate
}

pub trait Subst: Sized {
    /// Capture-avoiding `self[w/x]`.
    fn subst(&self, x: &str, w: &Value) -> Self;
}

/// Substitutes under a binder, renaming the binder when it would capture a variable of `w`.
fn subst_under<T: Subst + FreeVars + Clone>(
    binder: &Name,
    body: &T,
    x: &str,
    w: &Value,
) -> (Name, T) {
    if binder == x {
        return (binder.clone(), body.clone());
    }
    let fw = w.free_vars();
    if fw.contains(binder) && body.mentions(x) {
        let mut avoid = fw;
        avoid.extend(body.free_vars());
        avoid.insert(x.to_string());
        let fresh = freshen(binder, &avoid);
        let renamed = body.subst(binder, &Value::Var(fresh.clone()));
        (fresh, renamed.subst(x, w))
    } else {
        (binder.clone(), body.subst(x, w))
    }
}

impl Subst for Value {
    fn subst(&self, x: &str, w: &Value) -> Value {
        match self {
            Value::Var(y) if y == x => w.clone(),
            Value::Var(_) => self.clone(),
            Value::Const(Const::Partial(p, args)) => Value::Const(Const::Partial(
                *p,
                args.iter().map(|a| a.subst(x, w)).collect(),
            )),
            Value::Const(_) => self.clone(),
            Value::Extend(a, b, c) => Value::extend(a.subst(x, w), b.subst(x, w), c.subst(x, w)),
            Value::Fun(y, ann, body) => {
                let ann = ann.as_ref().map(|t| Box::new(t.subst(x, w)));
                let (y2, body2) = subst_under(y, body.as_ref(), x, w);
                Value::Fun(y2, ann, Box::new(body2))
            }
            Value::TFun(a, body) => Value::TFun(a.clone(), Box::new(body.subst(x, w))),
            Value::New(c, targs, args) => Value::New(
                c.clone(),
                targs
                    .as_ref()
                    .map(|ts| ts.iter().map(|t| t.subst(x, w)).collect()),
                args.iter().map(|a| a.subst(x, w)).collect(),
            ),
        }
    }
}

impl Subst for Expr {
    fn subst(&self, x: &str, w: &Value) -> Expr {
        match self {
            Expr::Val(v) => Expr::Val(v.subst(x, w)),
            Expr::App(a, b) => Expr::App(a.subst(x, w), b.subst(x, w)),
            Expr::TApp(v, t) => Expr::TApp(v.subst(x, w), t.subst(x, w)),
            Expr::If(v, e1, e2) => Expr::If(
                v.subst(x, w),
                Box::new(e1.subst(x, w)),
                Box::new(e2.subst(x, w)),
            ),
            Expr::Let(y, ann, e1, e2) => {
                let ann = ann.as_ref().map(|s| s.subst(x, w));
                let e1 = e1.subst(x, w);
                let (y2, e2) = subst_under(y, e2.as_ref(), x, w);
                Expr::Let(y2, ann, Box::new(e1), Box::new(e2))
            }
        }
    }
}

impl Subst for LVal {
    fn subst(&self, x: &str, w: &Value) -> LVal {
        match self {
            LVal::Nu => LVal::Nu,
            LVal::Val(v) => LVal::Val(v.subst(x, w)),
            LVal::App(f, args) => LVal::App(*f, args.iter().map(|a| a.subst(x, w)).collect()),
        }
    }
}

impl Subst for Formula {
    fn subst(&self, x: &str, w: &Value) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Pred(p, args) => {
                Formula::Pred(*p, args.iter().map(|a| a.subst(x, w)).collect())
            }
            Formula::HasType(lw, u) => Formula::HasType(lw.subst(x, w), u.subst(x, w)),
            Formula::And(ps) => Formula::And(ps.iter().map(|p| p.subst(x, w)).collect()),
            Formula::Or(ps) => Formula::Or(ps.iter().map(|p| p.subst(x, w)).collect()),
            Formula::Not(p) => Formula::not(p.subst(x, w)),
            Formula::Implies(p, q) => Formula::implies(p.subst(x, w), q.subst(x, w)),
            Formula::Iff(p, q) => Formula::iff(p.subst(x, w), q.subst(x, w)),
        }
    }
}

impl Subst for TypeTerm {
    fn subst(&self, x: &str, w: &Value) -> TypeTerm {
        match self {
            TypeTerm::Arrow(y, t1, t2) => {
                let t1 = t1.subst(x, w);
                let (y2, t2) = subst_under(y, t2.as_ref(), x, w);
                TypeTerm::Arrow(y2, Box::new(t1), Box::new(t2))
            }
            TypeTerm::TyVar(..) | TypeTerm::Null => self.clone(),
            TypeTerm::Ctor(c, ts) => {
                TypeTerm::Ctor(c.clone(), ts.iter().map(|t| t.subst(x, w)).collect())
            }
        }
    }
}

impl Subst for RefType {
    fn subst(&self, x: &str, w: &Value) -> RefType {
        RefType(self.0.subst(x, w))
    }
}

impl Subst for Scheme {
    fn subst(&self, x: &str, w: &Value) -> Scheme {
        match self {
            Scheme::Mono(t) => Scheme::Mono(t.subst(x, w)),
            Scheme::Forall(a, s) => Scheme::Forall(a.clone(), Box::new(s.subst(x, w))),
        }
    }
}

impl LVal {
    pub fn subst_nu(&self, lw: &LVal) -> LVal {
        match self {
            LVal::Nu => lw.clone(),
            LVal::Val(_) => self.clone(),
            LVal::App(f, args) => LVal::App(*f, args.iter().map(|a| a.subst_nu(lw)).collect()),
        }
    }

    pub fn mentions_nu(&self) -> bool {
        match self {
            LVal::Nu => true,
            LVal::Val(_) => false,
            LVal::App(_, args) => args.iter().any(LVal::mentions_nu),
        }
    }
}

impl Formula {
    /// `p[lw/ν]`; nested refinements inside type terms bind their own ν and are left alone.
    pub fn subst_nu(&self, lw: &LVal) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Pred(p, args) => {
                Formula::Pred(*p, args.iter().map(|a| a.subst_nu(lw)).collect())
            }
            Formula::HasType(a, u) => Formula::HasType(a.subst_nu(lw), u.clone()),
            Formula::And(ps) => Formula::And(ps.iter().map(|p| p.subst_nu(lw)).collect()),
            Formula::Or(ps) => Formula::Or(ps.iter().map(|p| p.subst_nu(lw)).collect()),
            Formula::Not(p) => Formula::not(p.subst_nu(lw)),
            Formula::Implies(p, q) => Formula::implies(p.subst_nu(lw), q.subst_nu(lw)),
            Formula::Iff(p, q) => Formula::iff(p.subst_nu(lw), q.subst_nu(lw)),
        }
    }

    pub fn mentions_nu(&self) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Pred(_, args) => args.iter().any(LVal::mentions_nu),
            Formula::HasType(a, _) => a.mentions_nu(),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().any(Formula::mentions_nu),
            Formula::Not(p) => p.mentions_nu(),
            Formula::Implies(p, q) | Formula::Iff(p, q) => p.mentions_nu() || q.mentions_nu(),
        }
    }
}

pub fn subst_nu(p: &Formula, lw: &LVal) -> Formula {
    p.subst_nu(lw)
}

/// Renames a free type variable throughout a type-level object.
pub trait RenameTyVar: Sized {
    fn rename_tyvar(&self, a: &str, b: &str) -> Self;
}

impl RenameTyVar for Formula {
    fn rename_tyvar(&self, a: &str, b: &str) -> Formula {
        match self {
            Formula::HasType(lw, u) => Formula::HasType(lw.clone(), u.rename_tyvar(a, b)),
            Formula::And(ps) => Formula::And(ps.iter().map(|p| p.rename_tyvar(a, b)).collect()),
            Formula::Or(ps) => Formula::Or(ps.iter().map(|p| p.rename_tyvar(a, b)).collect()),
            Formula::Not(p) => Formula::not(p.rename_tyvar(a, b)),
            Formula::Implies(p, q) => Formula::implies(p.rename_tyvar(a, b), q.rename_tyvar(a, b)),
            Formula::Iff(p, q) => Formula::iff(p.rename_tyvar(a, b), q.rename_tyvar(a, b)),
            other => other.clone(),
        }
    }
}

impl RenameTyVar for TypeTerm {
    fn rename_tyvar(&self, a: &str, b: &str) -> TypeTerm {
        match self {
            TypeTerm::Arrow(x, t1, t2) => TypeTerm::Arrow(
                x.clone(),
                Box::new(t1.rename_tyvar(a, b)),
                Box::new(t2.rename_tyvar(a, b)),
            ),
            TypeTerm::TyVar(n, m) if n == a => TypeTerm::TyVar(b.to_string(), *m),
            TypeTerm::Ctor(c, ts) => {
                TypeTerm::Ctor(c.clone(), ts.iter().map(|t| t.rename_tyvar(a, b)).collect())
            }
            other => other.clone(),
        }
    }
}

impl RenameTyVar for RefType {
    fn rename_tyvar(&self, a: &str, b: &str) -> RefType {
        RefType(self.0.rename_tyvar(a, b))
    }
}

impl RenameTyVar for Scheme {
    fn rename_tyvar(&self, a: &str, b: &str) -> Scheme {
        match self {
            Scheme::Mono(t) => Scheme::Mono(t.rename_tyvar(a, b)),
            Scheme::Forall(c, _) if c == a => self.clone(),
            Scheme::Forall(c, s) => Scheme::Forall(c.clone(), Box::new(s.rename_tyvar(a, b))),
        }
    }
}

// ---------------------------------------------------------------------------
// Alpha-canonical forms

/// Renames every bound term variable to a name derived from its binding depth.
#[derive(Default)]
struct Canon {
    scope: Vec<(Name, Name)>,
}

impl Canon {
    fn bind(&mut self, x: &Name) -> Name {
        let fresh = format!("%{}", self.scope.len());
        self.scope.push((x.clone(), fresh.clone()));
        fresh
    }
    fn unbind(&mut self) {
        self.scope.pop();
    }
    fn lookup(&self, x: &Name) -> Name {
        self.scope
            .iter()
            .rev()
            .find(|(o, _)| o == x)
            .map(|(_, n)| n.clone())
            .unwrap_or_else(|| x.clone())
    }

    fn value(&mut self, w: &Value) -> Value {
        match w {
            Value::Var(x) => Value::Var(self.lookup(x)),
            Value::Const(Const::Partial(p, args)) => Value::Const(Const::Partial(
                *p,
                args.iter().map(|a| self.value(a)).collect(),
            )),
            Value::Const(_) => w.clone(),
            Value::Extend(a, b, c) => Value::extend(self.value(a), self.value(b), self.value(c)),
            Value::Fun(x, ann, body) => {
                let ann = ann.as_ref().map(|t| Box::new(self.reft(t)));
                let x2 = self.bind(x);
                let body = self.expr(body);
                self.unbind();
                Value::Fun(x2, ann, Box::new(body))
            }
            Value::TFun(a, body) => Value::TFun(a.clone(), Box::new(self.expr(body))),
            Value::New(c, targs, args) => Value::New(
                c.clone(),
                targs
                    .as_ref()
                    .map(|ts| ts.iter().map(|t| self.reft(t)).collect()),
                args.iter().map(|a| self.value(a)).collect(),
            ),
        }
    }

    fn expr(&mut self, e: &Expr) -> Expr {
        match e {
            Expr::Val(w) => Expr::Val(self.value(w)),
            Expr::App(a, b) => Expr::App(self.value(a), self.value(b)),
            Expr::TApp(w, t) => Expr::TApp(self.value(w), self.reft(t)),
            Expr::If(w, e1, e2) => Expr::If(
                self.value(w),
                Box::new(self.expr(e1)),
                Box::new(self.expr(e2)),
            ),
            Expr::Let(x, ann, e1, e2) => {
                let ann = ann.as_ref().map(|s| self.scheme(s));
                let e1 = self.expr(e1);
                let x2 = self.bind(x);
                let e2 = self.expr(e2);
                self.unbind();
                Expr::Let(x2, ann, Box::new(e1), Box::new(e2))
            }
        }
    }

    fn lval(&mut self, lw: &LVal) -> LVal {
        match lw {
            LVal::Nu => LVal::Nu,
            LVal::Val(w) => LVal::Val(self.value(w)),
            LVal::App(f, args) => LVal::App(*f, args.iter().map(|a| self.lval(a)).collect()),
        }
    }

    fn formula(&mut self, p: &Formula) -> Formula {
        match p {
            Formula::True | Formula::False => p.clone(),
            Formula::Pred(q, args) => {
                Formula::Pred(*q, args.iter().map(|a| self.lval(a)).collect())
            }
            Formula::HasType(lw, u) => Formula::HasType(self.lval(lw), self.term(u)),
            Formula::And(ps) => Formula::And(ps.iter().map(|p| self.formula(p)).collect()),
            Formula::Or(ps) => Formula::Or(ps.iter().map(|p| self.formula(p)).collect()),
            Formula::Not(q) => Formula::not(self.formula(q)),
            Formula::Implies(a, b) => Formula::implies(self.formula(a), self.formula(b)),
            Formula::Iff(a, b) => Formula::iff(self.formula(a), self.formula(b)),
        }
    }

    fn term(&mut self, u: &TypeTerm) -> TypeTerm {
        match u {
            TypeTerm::Arrow(x, t1, t2) => {
                let t1 = self.reft(t1);
                let x2 = self.bind(x);
                let t2 = self.reft(t2);
                self.unbind();
                TypeTerm::Arrow(x2, Box::new(t1), Box::new(t2))
            }
            TypeTerm::TyVar(..) | TypeTerm::Null => u.clone(),
            TypeTerm::Ctor(c, ts) => {
                TypeTerm::Ctor(c.clone(), ts.iter().map(|t| self.reft(t)).collect())
            }
        }
    }

    fn reft(&mut self, t: &RefType) -> RefType {
        RefType(self.formula(&t.0))
    }

    fn scheme(&mut self, s: &Scheme) -> Scheme {
        match s {
            Scheme::Mono(t) => Scheme::Mono(self.reft(t)),
            Scheme::Forall(a, s) => Scheme::Forall(a.clone(), Box::new(self.scheme(s))),
        }
    }
}

/// Canonical representative of the alpha-equivalence class of `u`.
pub fn alpha_canonical(u: &TypeTerm) -> TypeTerm {
    Canon::default().term(u)
}

pub fn alpha_canonical_value(w: &Value) -> Value {
    Canon::default().value(w)
}

pub fn alpha_canonical_scheme(s: &Scheme) -> Scheme {
    Canon::default().scheme(s)
}

pub fn alpha_eq_scheme(a: &Scheme, b: &Scheme) -> bool {
    alpha_canonical_scheme(a) == alpha_canonical_scheme(b)
}

// ---------------------------------------------------------------------------
// Erasure

pub fn erase(e: &Expr) -> Expr {
    match e {
        Expr::Val(w) => Expr::Val(erase_value(w)),
        Expr::App(a, b) => Expr::App(erase_value(a), erase_value(b)),
        Expr::TApp(w, t) => Expr::TApp(erase_value(w), t.clone()),
        Expr::If(w, e1, e2) => Expr::If(erase_value(w), Box::new(erase(e1)), Box::new(erase(e2))),
        Expr::Let(x, _, e1, e2) => {
            Expr::Let(x.clone(), None, Box::new(erase(e1)), Box::new(erase(e2)))
        }
    }
}

pub fn erase_value(w: &Value) -> Value {
    match w {
        Value::Var(_) | Value::Const(_) => w.clone(),
        Value::Extend(a, b, c) => Value::extend(erase_value(a), erase_value(b), erase_value(c)),
        Value::Fun(x, _, body) => Value::Fun(x.clone(), None, Box::new(erase(body))),
        Value::TFun(a, body) => Value::TFun(a.clone(), Box::new(erase(body))),
        Value::New(c, _, args) => {
            Value::New(c.clone(), None, args.iter().map(erase_value).collect())
        }
    }
}

// ---------------------------------------------------------------------------
// Type-term collection

impl Formula {
    /// Type terms of the has-type atoms in this formula, without descending into them.
    pub fn top_type_terms(&self, out: &mut Vec<TypeTerm>) {
        match self {
            Formula::HasType(_, u) => out.push(u.clone()),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|p| p.top_type_terms(out)),
            Formula::Not(p) => p.top_type_terms(out),
            Formula::Implies(p, q) | Formula::Iff(p, q) => {
                p.top_type_terms(out);
                q.top_type_terms(out);
            }
            _ => {}
        }
    }

    pub fn has_type_atoms(&self) -> bool {
        let mut v = Vec::new();
        self.top_type_terms(&mut v);
        !v.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Printing in surface syntax

pub(crate) fn write_str_lit(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    write!(f, "\"")?;
    for c in s.chars() {
        match c {
            '"' => write!(f, "\\\"")?,
            '\\' => write!(f, "\\\\")?,
            '\n' => write!(f, "\\n")?,
            '\t' => write!(f, "\\t")?,
            c => write!(f, "{c}")?,
        }
    }
    write!(f, "\"")
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prim::Plus | Prim::Minus | Prim::Eq => write!(f, "({})", self.name()),
            _ => write!(f, "{}", self.name()),
        }
    }
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const::Int(n) => write!(f, "{n}"),
            Const::Bool(b) => write!(f, "{b}"),
            Const::Str(s) => write_str_lit(f, s),
            Const::Null => write!(f, "null"),
            Const::EmptyDict => write!(f, "{{}}"),
            Const::Prim(p) => write!(f, "{p}"),
            Const::Partial(p, args) => {
                write!(f, "({p}")?;
                for a in args {
                    write!(f, " {}", Atomic(a))?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Prints a value, parenthesizing it when it is not atomic.
struct Atomic<'a>(&'a Value);

impl fmt::Display for Atomic<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Value::Fun(..) | Value::TFun(..) => write!(f, "({})", self.0),
            _ => write!(f, "{}", self.0),
        }
    }
}

fn dict_entries(w: &Value) -> Option<Vec<(&Value, &Value)>> {
    match w {
        Value::Const(Const::EmptyDict) => Some(Vec::new()),
        Value::Extend(d, k, v) => {
            let mut es = dict_entries(d)?;
            es.push((k, v));
            Some(es)
        }
        _ => None,
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Var(x) => write!(f, "{x}"),
            Value::Const(c) => write!(f, "{c}"),
            Value::Extend(d, k, v) => match dict_entries(self) {
                Some(es)
                    if es
                        .iter()
                        .all(|(k, _)| matches!(k, Value::Const(Const::Str(_)))) =>
                {
                    write!(f, "{{")?;
                    for (i, (k, v)) in es.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{k}: {v}")?;
                    }
                    write!(f, "}}")
                }
                _ => write!(f, "set {} {} {}", Atomic(d), Atomic(k), Atomic(v)),
            },
            Value::Fun(x, None, body) => write!(f, "fun {x} -> {body}"),
            Value::Fun(x, Some(t), body) => write!(f, "fun ({x} :: {t}) -> {body}"),
            Value::TFun(a, body) => write!(f, "fun [{a}] -> {body}"),
            Value::New(c, targs, args) => {
                write!(f, "new {c}")?;
                if let Some(ts) = targs {
                    write!(f, "[")?;
                    for (i, t) in ts.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{t}")?;
                    }
                    write!(f, "]")?;
                }
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Val(w) => write!(f, "{w}"),
            Expr::App(a, b) => write!(f, "{} {}", Atomic(a), Atomic(b)),
            Expr::TApp(w, t) => write!(f, "{} [{t}]", Atomic(w)),
            Expr::If(w, e1, e2) => write!(f, "if {w} then {e1} else {e2}"),
            Expr::Let(x, None, e1, e2) => write!(f, "let {x} = {e1} in {e2}"),
            Expr::Let(x, Some(s), e1, e2) => write!(f, "let {x} :: {s} = {e1} in {e2}"),
        }
    }
}

impl fmt::Display for LVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LVal::Nu => write!(f, "v"),
            LVal::Val(
                w @ (Value::Fun(..) | Value::TFun(..) | Value::New(..) | Value::Extend(..)),
            ) => {
                write!(f, "({w})")
            }
            LVal::Val(Value::Const(Const::Prim(p))) => write!(f, "{}", p.name()),
            LVal::Val(w) => write!(f, "{w}"),
            LVal::App(Func::Plus, args) => write!(f, "({} + {})", args[0], args[1]),
            LVal::App(Func::Minus, args) => write!(f, "({} - {})", args[0], args[1]),
            LVal::App(Func::Tag, args) => write!(f, "tag({})", args[0]),
            LVal::App(Func::Sel, args) => write!(f, "sel({}, {})", args[0], args[1]),
        }
    }
}

fn formula_prec(p: &Formula) -> u8 {
    match p {
        Formula::Iff(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Or(_) => 3,
        Formula::And(_) => 4,
        Formula::Not(_) => 5,
        _ => 6,
    }
}

struct Prec<'a>(&'a Formula, u8);

impl fmt::Display for Prec<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if formula_prec(self.0) < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Pred(Pred::Eq, a) => write!(f, "{} = {}", a[0], a[1]),
            Formula::Pred(Pred::Lt, a) => write!(f, "{} < {}", a[0], a[1]),
            Formula::Pred(Pred::Le, a) => write!(f, "{} <= {}", a[0], a[1]),
            Formula::Pred(Pred::Has, a) => write!(f, "has({}, {})", a[0], a[1]),
            Formula::Pred(Pred::EqMod, a) => write!(f, "eqmod({}, {}, {})", a[0], a[1], a[2]),
            Formula::HasType(lw, u) => write!(f, "{lw} :: {}", TermIn(u, false)),
            Formula::And(ps) => {
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, " /\\ ")?;
                    }
                    write!(f, "{}", Prec(p, 5))?;
                }
                Ok(())
            }
            Formula::Or(ps) => {
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, " \\/ ")?;
                    }
                    write!(f, "{}", Prec(p, 4))?;
                }
                Ok(())
            }
            Formula::Not(p) => match p.as_ref() {
                Formula::Pred(Pred::Eq, a) => write!(f, "{} != {}", a[0], a[1]),
                _ => write!(f, "not {}", Prec(p, 6)),
            },
            Formula::Implies(p, q) => write!(f, "{} => {}", Prec(p, 3), Prec(q, 2)),
            Formula::Iff(p, q) => write!(f, "{} <=> {}", Prec(p, 2), Prec(q, 2)),
        }
    }
}

/// Prints a type term; the flag requests parentheses around arrows.
struct TermIn<'a>(&'a TypeTerm, bool);

impl fmt::Display for TermIn<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            TypeTerm::Arrow(..) if self.1 => write!(f, "({})", self.0),
            _ => write!(f, "{}", self.0),
        }
    }
}

impl fmt::Display for TypeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeTerm::Arrow(x, t1, t2) => {
                let dom = RefIn(t1, true);
                if t2.mentions(x) {
                    write!(f, "{x}:{dom} -> {}", RefIn(t2, false))
                } else {
                    write!(f, "{dom} -> {}", RefIn(t2, false))
                }
            }
            TypeTerm::TyVar(a, false) => write!(f, "{a}"),
            TypeTerm::TyVar(a, true) => write!(f, "*{a}"),
            TypeTerm::Null => write!(f, "Null"),
            TypeTerm::Ctor(c, ts) => {
                write!(f, "{c}[")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Abbreviation recognized when printing a refinement type.
fn abbreviation(t: &RefType) -> Option<&'static str> {
    let is_tag = |p: &Formula, name: &str| *p == Formula::tag_is(LVal::Nu, name);
    match &t.0 {
        Formula::True => Some("Top"),
        p if is_tag(p, "Int") => Some("Int"),
        p if is_tag(p, "Bool") => Some("Bool"),
        p if is_tag(p, "Str") => Some("Str"),
        p if is_tag(p, "Dict") => Some("Dict"),
        Formula::Or(ps) if ps.len() == 2 && is_tag(&ps[0], "Int") && is_tag(&ps[1], "Bool") => {
            Some("IorB")
        }
        _ => None,
    }
}

/// Prints a refinement type; the flag requests parentheses around arrows.
struct RefIn<'a>(&'a RefType, bool);

impl fmt::Display for RefIn<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(a) = abbreviation(self.0) {
            return write!(f, "{a}");
        }
        match &self.0 .0 {
            Formula::HasType(LVal::Nu, u @ TypeTerm::Arrow(..)) => {
                write!(f, "{}", TermIn(u, self.1))
            }
            Formula::HasType(LVal::Nu, u @ (TypeTerm::Ctor(..) | TypeTerm::TyVar(..))) => {
                write!(f, "{u}")
            }
            p => write!(f, "{{v | {p}}}"),
        }
    }
}

impl fmt::Display for RefType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", RefIn(self, false))
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut vars = Vec::new();
        let mut s = self;
        while let Scheme::Forall(a, body) = s {
            vars.push(a.as_str());
            s = body;
        }
        if !vars.is_empty() {
            write!(f, "forall {}. ", vars.join(", "))?;
        }
        match s {
            Scheme::Mono(t) => write!(f, "{t}"),
            Scheme::Forall(..) => unreachable!(),
        }
    }
}

impl fmt::Display for Variance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variance::Co => write!(f, "+"),
            Variance::Contra => write!(f, "-"),
            Variance::Inv => write!(f, "="),
        }
    }
}

impl fmt::Display for DatatypeDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type {}[", self.name)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{}", p.variance, p.name)?;
        }
        write!(f, "] {{")?;
        for (i, (n, t)) in self.fields.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}: {{v | {}}}", t.0)?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subst_replaces_free_occurrence() {
        let t = RefType::singleton(LVal::var("x"));
        assert_eq!(
            t.subst("x", &Value::int(3)),
            RefType::singleton(LVal::int(3))
        );
    }

    #[test]
    fn subst_stops_at_shadowing_binder() {
        let f = Value::fun("x", None, Expr::Val(Value::var("x")));
        assert_eq!(f.subst("x", &Value::int(3)), f);
    }

    #[test]
    fn subst_avoids_capture() {
        // (fun y -> x)[y/x] must not capture.
        let f = Value::fun("y", None, Expr::Val(Value::var("x")));
        let g = f.subst("x", &Value::var("y"));
        match g {
            Value::Fun(b, _, body) => {
                assert_ne!(b, "y");
                assert_eq!(*body, Expr::Val(Value::var("y")));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn subst_nu_leaves_nested_refinements() {
        let inner = TypeTerm::Arrow(
            "y".into(),
            Box::new(RefType::int()),
            Box::new(RefType::singleton(LVal::var("y"))),
        );
        let p = Formula::and(vec![
            Formula::tag_is(LVal::Nu, "Int"),
            Formula::HasType(LVal::Nu, inner.clone()),
        ]);
        let q = p.subst_nu(&LVal::var("x"));
        assert_eq!(
            q,
            Formula::and(vec![
                Formula::tag_is(LVal::var("x"), "Int"),
                Formula::HasType(LVal::var("x"), inner)
            ])
        );
        let r = Formula::eq(LVal::Nu, LVal::int(0))
            .subst_nu(&LVal::sel(LVal::var("d"), LVal::str("c")));
        assert_eq!(r.to_string(), "sel(d, \"c\") = 0");
    }

    #[test]
    fn alpha_canonical_identifies_renamings() {
        let a = TypeTerm::Arrow(
            "x".into(),
            Box::new(RefType::int()),
            Box::new(RefType::singleton(LVal::var("x"))),
        );
        let b = TypeTerm::Arrow(
            "y".into(),
            Box::new(RefType::int()),
            Box::new(RefType::singleton(LVal::var("y"))),
        );
        assert_eq!(alpha_canonical(&a), alpha_canonical(&b));
        let tv = TypeTerm::TyVar("A".into(), false);
        assert_eq!(alpha_canonical(&tv), tv);
    }

    #[test]
    fn erase_drops_annotations() {
        let e = Expr::Let(
            "x".into(),
            Some(Scheme::Mono(RefType::int())),
            Box::new(Expr::Val(Value::int(1))),
            Box::new(Expr::Val(Value::var("x"))),
        );
        assert_eq!(erase(&e).to_string(), "let x = 1 in x");
        let f = Value::fun("x", Some(RefType::int()), Expr::Val(Value::var("x")));
        assert_eq!(erase_value(&f).to_string(), "fun x -> x");
        let n = Value::New(
            "List".into(),
            Some(vec![RefType::int()]),
            vec![Value::int(1), Value::null()],
        );
        assert_eq!(erase_value(&n).to_string(), "new List(1, null)");
    }

    #[test]
    fn printing_uses_abbreviations() {
        let t = RefType::arrow(
            "x",
            RefType::ior_b(),
            RefType(Formula::eq(LVal::tag(LVal::Nu), LVal::tag(LVal::var("x")))),
        );
        assert_eq!(t.to_string(), "x:IorB -> {v | tag(v) = tag(x)}");
        assert_eq!(RefType::list(RefType::top()).to_string(), "List[Top]");
    }
}
