#![allow(dead_code)]

use duckcheck_core::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn session() -> Session {
    Session::open(SolverConfig::default()).expect("z3 on PATH")
}

pub fn checker() -> Checker {
    Checker::new(session(), default_defs(), CheckOptions::default())
}

/// Closed dictionaries over a small key alphabet, possibly nested.
pub fn dict() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        (-5i64..5).prop_map(Value::int),
        any::<bool>().prop_map(Value::bool),
        "[a-c]".prop_map(|s| Value::str(&s)),
        Just(Value::null()),
    ];
    let entries = |inner: BoxedStrategy<Value>| {
        prop::collection::vec(("[a-d]", inner), 0..4).prop_map(|es| {
            es.into_iter()
                .fold(Value::empty(), |d, (k, v)| Value::extend(d, Value::str(&k), v))
        })
    };
    let flat = entries(leaf.clone().boxed());
    entries(prop_oneof![3 => leaf, 1 => flat].boxed())
}

pub fn key() -> impl Strategy<Value = Value> {
    "[a-d]".prop_map(|s| Value::str(&s))
}

/// Small monomorphic types built from base tags, singletons, nulls, arrows and lists.
pub fn reftype() -> impl Strategy<Value = RefType> {
    let base = prop_oneof![
        Just(RefType::int()),
        Just(RefType::bool()),
        Just(RefType::str()),
        Just(RefType::dict()),
        Just(RefType::top()),
        Just(RefType::ior_b()),
        (-3i64..3).prop_map(|n| RefType::singleton(LVal::int(n))),
        Just(RefType::singleton(LVal::null())),
    ];
    base.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| RefType::arrow("y", a, b)),
            inner.clone().prop_map(RefType::list),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| RefType(Formula::or(vec![a.0, b.0]))),
            (inner.clone(), "[a-c]").prop_map(|(t, k)| {
                RefType(Formula::and(vec![
                    Formula::tag_is(LVal::Nu, "Dict"),
                    Formula::has(LVal::Nu, LVal::str(&k)),
                    t.0.subst_nu(&LVal::sel(LVal::Nu, LVal::str(&k))),
                ]))
            }),
        ]
    })
}

pub fn scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![
        3 => reftype().prop_map(Scheme::mono),
        1 => reftype().prop_map(|t| {
            let body = RefType::arrow("y", RefType::tyvar("A"), RefType(Formula::or(vec![t.0, RefType::tyvar("A").0])));
            Scheme::forall(&["A"], Scheme::mono(body))
        }),
    ]
}

/// Random closed A-normal programs over integers, booleans, strings, dictionaries and lambdas.
pub struct Gen {
    rng: StdRng,
    next: usize,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen { rng: StdRng::seed_from_u64(seed), next: 0 }
    }

    fn fresh(&mut self) -> Name {
        self.next += 1;
        format!("g{}", self.next)
    }

    fn constant(&mut self) -> Value {
        match self.rng.gen_range(0..7) {
            0 | 1 => Value::int(self.rng.gen_range(-3..4)),
            2 => Value::bool(self.rng.gen()),
            3 => Value::str(["a", "b", "c"][self.rng.gen_range(0..3)]),
            4 => Value::null(),
            5 => Value::empty(),
            _ => Value::prim(Prim::ALL[self.rng.gen_range(0..Prim::ALL.len())]),
        }
    }

    pub fn value(&mut self, scope: &[Name], depth: u32) -> Value {
        let roll = self.rng.gen_range(0..10);
        if !scope.is_empty() && roll < 4 {
            return Value::var(&scope[self.rng.gen_range(0..scope.len())]);
        }
        if depth == 0 || roll < 7 {
            return self.constant();
        }
        if roll < 9 {
            let x = self.fresh();
            let mut inner = scope.to_vec();
            inner.push(x.clone());
            let body = self.expr(&inner, depth - 1);
            Value::fun(&x, None, body)
        } else {
            let d = self.value(scope, depth - 1);
            let k = Value::str(["a", "b"][self.rng.gen_range(0..2)]);
            let v = self.value(scope, depth - 1);
            Value::extend(d, k, v)
        }
    }

    pub fn expr(&mut self, scope: &[Name], depth: u32) -> Expr {
        let roll = if depth == 0 { self.rng.gen_range(0..2) } else { self.rng.gen_range(0..6) };
        match roll {
            0 => Expr::Val(self.value(scope, depth)),
            1 => Expr::App(self.value(scope, depth), self.value(scope, depth)),
            2 => Expr::If(
                self.value(scope, depth - 1),
                Box::new(self.expr(scope, depth - 1)),
                Box::new(self.expr(scope, depth - 1)),
            ),
            3 => Expr::TApp(Value::prim(Prim::Fix), RefType::top()),
            _ => {
                let x = self.fresh();
                let rhs = self.expr(scope, depth - 1);
                let mut inner = scope.to_vec();
                inner.push(x.clone());
                Expr::Let(x, None, Box::new(rhs), Box::new(self.expr(&inner, depth - 1)))
            }
        }
    }
}

