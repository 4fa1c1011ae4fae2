//! Small-step call-by-value semantics.

use std::fmt;

use crate::constants::tag_of;
use crate::logic::{dict_entries, eval_ground, values_equal, GroundModel, Truth};
use crate::syntax::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stuck {
    /// The primitive is not defined on its argument.
    Delta { prim: &'static str, arg: Value },
    NotAFunction(Value),
    NotATypeFunction(Value),
    NonBoolGuard(Value),
    FreeVariable(Name),
}

impl fmt::Display for Stuck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stuck::Delta { prim, arg } => write!(f, "primitive `{prim}` is undefined on {arg}"),
            Stuck::NotAFunction(w) => write!(f, "cannot apply non-function {w}"),
            Stuck::NotATypeFunction(w) => write!(f, "cannot instantiate non-polymorphic value {w}"),
            Stuck::NonBoolGuard(w) => write!(f, "if-guard {w} is not a boolean"),
            Stuck::FreeVariable(x) => write!(f, "free variable {x}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepResult {
    Stepped(Expr),
    Value(Value),
    Stuck(Stuck),
}

/// `δ(c, w)`. Under-applied primitives return partial applications.
pub fn delta(c: &Const, w: &Value, defs: &DefEnv) -> Result<Expr, Stuck> {
    let (p, mut args) = match c {
        Const::Prim(p) => (*p, Vec::new()),
        Const::Partial(p, args) => (*p, args.clone()),
        _ => return Err(Stuck::NotAFunction(Value::Const(c.clone()))),
    };
    args.push(w.clone());
    if args.len() < p.arity() {
        return Ok(Expr::Val(Value::Const(Const::Partial(p, args))));
    }
    let undefined = || Stuck::Delta { prim: p.name(), arg: w.clone() };
    let int = |v: &Value| match v {
        Value::Const(Const::Int(n)) => Some(*n),
        _ => None,
    };
    let string = |v: &Value| match v {
        Value::Const(Const::Str(s)) => Some(s.clone()),
        _ => None,
    };
    let val = |v: Value| Ok(Expr::Val(v));
    match (p, args.as_slice()) {
        (Prim::Plus, [a, b]) => match (int(a), int(b)) {
            (Some(a), Some(b)) => a.checked_add(b).map(Value::int).map(Expr::Val).ok_or_else(undefined),
            _ => Err(undefined()),
        },
        (Prim::Minus, [a, b]) => match (int(a), int(b)) {
            (Some(a), Some(b)) => a.checked_sub(b).map(Value::int).map(Expr::Val).ok_or_else(undefined),
            _ => Err(undefined()),
        },
        (Prim::Eq, [a, b]) => val(Value::bool(values_equal(a, b, defs))),
        (Prim::Not, [Value::Const(Const::Bool(b))]) => val(Value::bool(!b)),
        (Prim::Tag, [a]) => tag_of(a).map(|t| Expr::Val(Value::str(t))).ok_or_else(undefined),
        (Prim::Has | Prim::Mem, [d, k]) => {
            let (Some(entries), Some(k)) = (dict_entries(d, defs), string(k)) else {
                return Err(undefined());
            };
            val(Value::bool(entries.iter().any(|(k2, _)| *k2 == k)))
        }
        (Prim::Get, [d, k]) => {
            let (Some(entries), Some(k)) = (dict_entries(d, defs), string(k)) else {
                return Err(undefined());
            };
            entries
                .into_iter()
                .find(|(k2, _)| *k2 == k)
                .map(|(_, v)| Expr::Val(v))
                .ok_or_else(undefined)
        }
        (Prim::Set, [d, k, x]) => {
            if dict_entries(d, defs).is_none() || string(k).is_none() {
                return Err(undefined());
            }
            val(Value::extend(d.clone(), k.clone(), x.clone()))
        }
        (Prim::Keys, [d]) => {
            let entries = dict_entries(d, defs).ok_or_else(undefined)?;
            let list = entries
                .into_iter()
                .rev()
                .fold(Value::null(), |tl, (k, _)| Value::New("List".into(), None, vec![Value::str(&k), tl]));
            val(list)
        }
        (Prim::Fix, [f]) => {
            // fun y -> let r = fix f in let g = f r in g y
            let (y, r, g) = ("fix~y", "fix~r", "fix~g");
            let body = Expr::Let(
                r.into(),
                None,
                Box::new(Expr::App(Value::prim(Prim::Fix), f.clone())),
                Box::new(Expr::Let(
                    g.into(),
                    None,
                    Box::new(Expr::App(f.clone(), Value::var(r))),
                    Box::new(Expr::App(Value::var(g), Value::var(y))),
                )),
            );
            val(Value::fun(y, None, body))
        }
        _ => Err(undefined()),
    }
}

/// One reduction step.
pub fn step(e: &Expr, defs: &DefEnv) -> StepResult {
    match e {
        Expr::Val(Value::Var(x)) => StepResult::Stuck(Stuck::FreeVariable(x.clone())),
        Expr::Val(w) => StepResult::Value(w.clone()),
        Expr::App(w1, w2) => {
            if let Some(x) = first_free(&[w1, w2]) {
                return StepResult::Stuck(Stuck::FreeVariable(x));
            }
            match w1 {
                Value::Fun(x, _, body) => StepResult::Stepped(body.subst(x, w2)),
                Value::Const(c @ (Const::Prim(_) | Const::Partial(..))) => match delta(c, w2, defs) {
                    Ok(e) => StepResult::Stepped(e),
                    Err(s) => StepResult::Stuck(s),
                },
                _ => StepResult::Stuck(Stuck::NotAFunction(w1.clone())),
            }
        }
        Expr::TApp(w, _) => match w {
            Value::TFun(_, body) => StepResult::Stepped((**body).clone()),
            Value::Const(Const::Prim(Prim::Fix)) => StepResult::Stepped(Expr::Val(w.clone())),
            Value::Var(x) => StepResult::Stuck(Stuck::FreeVariable(x.clone())),
            _ => StepResult::Stuck(Stuck::NotATypeFunction(w.clone())),
        },
        Expr::If(w, e1, e2) => match w {
            Value::Const(Const::Bool(true)) => StepResult::Stepped((**e1).clone()),
            Value::Const(Const::Bool(false)) => StepResult::Stepped((**e2).clone()),
            Value::Var(x) => StepResult::Stuck(Stuck::FreeVariable(x.clone())),
            _ => StepResult::Stuck(Stuck::NonBoolGuard(w.clone())),
        },
        Expr::Let(x, ann, e1, e2) => match &**e1 {
            Expr::Val(w) if !matches!(w, Value::Var(_)) => StepResult::Stepped(e2.subst(x, w)),
            _ => match step(e1, defs) {
                StepResult::Stepped(e1b) => StepResult::Stepped(Expr::Let(x.clone(), ann.clone(), Box::new(e1b), e2.clone())),
                StepResult::Value(w) => StepResult::Stepped(e2.subst(x, &w)),
                stuck => stuck,
            },
        },
    }
}

fn first_free(ws: &[&Value]) -> Option<Name> {
    ws.iter().find_map(|w| w.free_vars().into_iter().next())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Value(Value),
    Stuck { reason: Stuck, state: Expr },
    OutOfFuel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub outcome: Outcome,
    pub steps: u64,
}

/// Runs at most `fuel` steps. Type annotations are erased first.
pub fn eval(e: &Expr, defs: &DefEnv, fuel: u64) -> Run {
    eval_traced(e, defs, fuel, |_| {})
}

/// Like [`eval`], calling `trace` on every intermediate expression.
pub fn eval_traced(e: &Expr, defs: &DefEnv, fuel: u64, mut trace: impl FnMut(&Expr)) -> Run {
    let mut cur = erase(e);
    let mut steps = 0;
    loop {
        trace(&cur);
        match step(&cur, defs) {
            StepResult::Value(w) => return Run { outcome: Outcome::Value(w), steps },
            StepResult::Stuck(reason) => return Run { outcome: Outcome::Stuck { reason, state: cur }, steps },
            StepResult::Stepped(next) => {
                if steps == fuel {
                    return Run { outcome: Outcome::OutOfFuel, steps };
                }
                steps += 1;
                cur = next;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefinementCheck {
    Holds,
    Violated(Formula),
    /// The refinement has no decidable ground part for this value.
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeReport {
    pub run: Run,
    pub refinement: RefinementCheck,
}

impl ProbeReport {
    pub fn sound(&self) -> bool {
        !matches!(self.run.outcome, Outcome::Stuck { .. }) && !matches!(self.refinement, RefinementCheck::Violated(_))
    }
}

/// The top-level conjuncts of `p` that contain no type predicates.
pub fn ground_part(p: &Formula) -> Formula {
    match p {
        Formula::And(ps) => Formula::and(ps.iter().map(ground_part).collect()),
        q if q.has_type_atoms() => Formula::True,
        q => q.clone(),
    }
}

/// Evaluates a checked program and compares the result against its scheme.
pub fn soundness_probe(defs: &DefEnv, e: &Expr, scheme: &Scheme, fuel: u64) -> ProbeReport {
    let run = eval(e, defs, fuel);
    let refinement = match (&run.outcome, scheme) {
        (Outcome::Value(w), Scheme::Mono(t)) => {
            let p = ground_part(&t.0).subst_nu(&LVal::Val(w.clone()));
            if p == Formula::True {
                RefinementCheck::Undecided
            } else {
                match eval_ground(&p, &GroundModel::new(defs.clone())) {
                    Truth::True => RefinementCheck::Holds,
                    Truth::False => RefinementCheck::Violated(p),
                    Truth::Stuck => RefinementCheck::Undecided,
                }
            }
        }
        _ => RefinementCheck::Undecided,
    };
    ProbeReport { run, refinement }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_program;

    fn run(src: &str) -> Outcome {
        let p = load_program(src).unwrap();
        eval(&p.body, &p.defs, 100_000).outcome
    }

    #[test]
    fn primitive_table() {
        let defs = default_defs();
        let d = Value::extend(Value::empty(), Value::str("x"), Value::int(3));
        let get = |d: &Value, k: &str| {
            let Ok(Expr::Val(p)) = delta(&Const::Prim(Prim::Get), d, &defs) else { panic!() };
            let Value::Const(c) = p else { panic!() };
            delta(&c, &Value::str(k), &defs)
        };
        assert_eq!(get(&d, "x"), Ok(Expr::Val(Value::int(3))));
        assert!(get(&d, "y").is_err());
        assert!(get(&Value::int(3), "x").is_err());
        assert_eq!(
            delta(&Const::Partial(Prim::Has, vec![Value::empty()]), &Value::str("x"), &defs),
            Ok(Expr::Val(Value::bool(false)))
        );
        assert_eq!(delta(&Const::Prim(Prim::Tag), &Value::bool(true), &defs), Ok(Expr::Val(Value::str("Bool"))));
        assert_eq!(delta(&Const::Prim(Prim::Tag), &Value::null(), &defs), Ok(Expr::Val(Value::str("Null"))));
    }

    #[test]
    fn keys_are_outermost_first() {
        let d = Value::extend(Value::extend(Value::empty(), Value::str("a"), Value::int(1)), Value::str("b"), Value::int(2));
        let Ok(Expr::Val(l)) = delta(&Const::Prim(Prim::Keys), &d, &default_defs()) else { panic!() };
        let Value::New(_, _, args) = l else { panic!() };
        assert_eq!(args[0], Value::str("b"));
    }

    #[test]
    fn basic_programs() {
        assert_eq!(run("(fun x -> x) 3"), Outcome::Value(Value::int(3)));
        assert_eq!(run("if true then 1 else 2"), Outcome::Value(Value::int(1)));
        assert!(matches!(run("get 3 \"x\""), Outcome::Stuck { reason: Stuck::Delta { prim: "get", .. }, .. }));
        assert_eq!(run("let d = {\"a\": 1} in d[\"a\"] + 1"), Outcome::Value(Value::int(2)));
    }

    #[test]
    fn values_take_no_steps() {
        let r = eval(&Expr::Val(Value::int(7)), &default_defs(), 0);
        assert_eq!(r, Run { outcome: Outcome::Value(Value::int(7)), steps: 0 });
    }

    #[test]
    fn recursion_and_divergence() {
        let sum = "let rec sum :: Int -> Int = fun n -> if n = 0 then 0 else n + sum (n - 1) in sum 10";
        assert_eq!(run(sum), Outcome::Value(Value::int(55)));
        assert_eq!(run("let rec loop :: Int -> Int = fun x -> loop x in loop 0"), Outcome::OutOfFuel);
    }
}
