mod common;

use std::sync::{Mutex, OnceLock};

use duckcheck_core::logic::embed_env;
use duckcheck_core::subtype::UsedSet;
use duckcheck_core::*;
use proptest::prelude::*;

fn shared() -> &'static Mutex<Engine> {
    static E: OnceLock<Mutex<Engine>> = OnceLock::new();
    E.get_or_init(|| Mutex::new(Engine::new(common::session(), default_defs())))
}

fn int_to_int() -> TypeTerm {
    TypeTerm::Arrow("x".into(), Box::new(RefType::int()), Box::new(RefType::int()))
}

fn list_int() -> TypeTerm {
    TypeTerm::Ctor("List".into(), vec![RefType::int()])
}

/// Shape class of a closed value or of a type term.
#[derive(Debug, PartialEq, Eq)]
enum Class {
    Arrow,
    Ctor,
    Null,
    Other,
}

fn value_class(w: &Value) -> Class {
    match w {
        Value::Fun(..) | Value::Const(Const::Prim(_) | Const::Partial(..)) => Class::Arrow,
        Value::New(..) => Class::Ctor,
        Value::Const(Const::Null) => Class::Null,
        _ => Class::Other,
    }
}

fn term_class(u: &TypeTerm) -> Class {
    match u {
        TypeTerm::Arrow(..) => Class::Arrow,
        TypeTerm::Ctor(..) => Class::Ctor,
        TypeTerm::Null => Class::Null,
        TypeTerm::TyVar(..) => Class::Other,
    }
}

fn prim_term(p: Prim) -> TypeTerm {
    match constants::prim_arrow(p).unwrap().0 {
        Formula::HasType(LVal::Nu, u) => u,
        other => panic!("unexpected primitive type {other}"),
    }
}

/// Closed values paired with a type term they inhabit, as they occur in the example programs.
fn instances() -> Vec<(Value, Option<TypeTerm>)> {
    let succ = Value::fun(
        "n",
        None,
        Expr::App(Value::Const(Const::Partial(Prim::Plus, vec![Value::int(1)])), Value::var("n")),
    );
    let one = Value::New("List".into(), None, vec![Value::int(1), Value::null()]);
    vec![
        (succ, Some(int_to_int())),
        (Value::prim(Prim::Plus), Some(prim_term(Prim::Plus))),
        (Value::prim(Prim::Keys), None),
        (one.clone(), Some(list_int())),
        (Value::New("List".into(), None, vec![Value::int(2), one]), Some(list_int())),
        (Value::null(), Some(TypeTerm::Null)),
        (Value::int(3), None),
        (Value::extend(Value::empty(), Value::str("a"), Value::int(1)), None),
    ]
}

#[test]
fn extracted_terms_match_value_shapes() {
    let mut e = Engine::new(common::session(), default_defs());
    let inst = instances();
    let mut g = TypeEnv::new();
    for (i, (w, u)) in inst.iter().enumerate() {
        let mut facts = vec![Formula::eq(LVal::Nu, LVal::Val(w.clone()))];
        if let Some(u) = u {
            facts.push(Formula::has_type(LVal::Nu, u.clone()));
        }
        g = g.bind(&format!("x{i}"), Scheme::mono(RefType(Formula::and(facts))));
    }
    g = g.bind("f", Scheme::mono(RefType(Formula::or(vec![
        Formula::eq(LVal::Nu, LVal::null()),
        Formula::has_type(LVal::Nu, int_to_int()),
    ]))));
    let mut extracted = 0;
    for (w, _) in &inst {
        let t = RefType::singleton(LVal::Val(w.clone()));
        for u in e.must_flow(&g, &t, &UsedSet::new()).unwrap() {
            assert_eq!(term_class(&u), value_class(w), "{u} extracted for {w}");
            extracted += 1;
        }
    }
    assert!(extracted >= 5, "only {extracted} extractions");
}

fn env() -> impl Strategy<Value = TypeEnv> {
    (prop::collection::vec(common::reftype(), 1..4), any::<bool>()).prop_map(|(ts, guard)| {
        let mut g = TypeEnv::new();
        for (i, t) in ts.into_iter().enumerate() {
            g = g.bind(&format!("x{i}"), Scheme::mono(t));
        }
        if guard {
            g = g.guard(Formula::not(Formula::eq(LVal::var("x0"), LVal::null())));
        }
        g
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn subtyping_is_reflexive(s in common::scheme()) {
        let mut e = shared().lock().unwrap();
        let r = e.subtype(&TypeEnv::new(), &s, &s);
        prop_assert!(r.is_ok(), "{} </: itself: {}", s, r.unwrap_err());
    }

    #[test]
    fn must_flow_results_are_entailed(g in env(), i in 0usize..3) {
        let x = format!("x{}", i.min(g.len() - 1));
        let t = RefType::singleton(LVal::var(&x));
        let found = shared().lock().unwrap().must_flow(&g, &t, &UsedSet::new()).unwrap();
        let mut fresh = common::session();
        for u in found {
            let goal = Formula::has_type(LVal::var(&x), u.clone());
            prop_assert_eq!(fresh.check_valid(&[embed_env(&g)], &goal).unwrap(), Verdict::Valid, "{}", u);
        }
    }
}
