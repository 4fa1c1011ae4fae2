mod common;

use std::sync::{Mutex, OnceLock};

use duckcheck_core::eval::ground_part;
use duckcheck_core::syntax::FreeVars;
use duckcheck_core::wf::check_type;
use duckcheck_core::*;
use proptest::prelude::*;

fn shared() -> &'static Mutex<Checker> {
    static C: OnceLock<Mutex<Checker>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(common::checker()))
}

#[test]
fn synthesis_is_well_formed_and_coherent_with_conversion() {
    let mut c = common::checker();
    let empty = TypeEnv::new();
    let mut typed = 0;
    for seed in 0..200 {
        let e = common::Gen::new(seed).expr(&[], 3);
        let Ok(s) = c.synth(&empty, &e) else { continue };
        typed += 1;
        assert_eq!(check_type(&c.eng.defs, &empty, &s), Ok(()), "{e} : {s}");
        if let Err(err) = c.convert(&empty, &e, &s) {
            panic!("{e} synthesizes {s} but does not convert to it: {err}");
        }
    }
    assert!(typed >= 50, "only {typed} of 200 generated terms synthesized");
}

fn x_scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![
        Just(RefType::singleton(LVal::var("y"))),
        Just(RefType::singleton(LVal::int(4))),
        Just(RefType(Formula::and(vec![
            Formula::tag_is(LVal::Nu, "Bool"),
            Formula::iff(Formula::eq(LVal::Nu, LVal::bool(true)), Formula::has(LVal::var("y"), LVal::str("a"))),
        ]))),
        common::reftype(),
    ]
    .prop_map(Scheme::mono)
}

fn x_formula() -> impl Strategy<Value = Formula> {
    let x = LVal::var("x");
    let atom = prop_oneof![
        Just(Formula::eq(LVal::Nu, x.clone())),
        Just(Formula::eq(x.clone(), LVal::bool(true))),
        Just(Formula::eq(LVal::bool(false), x.clone())),
        Just(Formula::has(x.clone(), LVal::Nu)),
        Just(Formula::eq(LVal::sel(x.clone(), LVal::str("a")), LVal::Nu)),
        Just(Formula::eq(LVal::Nu, LVal::plus(x.clone(), LVal::int(1)))),
        Just(Formula::tag_is(LVal::Nu, "Int")),
        Just(Formula::has_type(
            LVal::Nu,
            TypeTerm::Arrow("z".into(), Box::new(RefType::int()), Box::new(RefType::singleton(x))),
        )),
    ];
    atom.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::Or),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            inner.prop_map(Formula::not),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn elim_output_never_mentions_the_variable(s in x_scheme(), p in x_formula()) {
        let c = shared().lock().unwrap();
        if let Some(t) = c.elim("x", &s, &RefType(p)) {
            prop_assert!(!t.free_vars().contains("x"), "{}", t);
        }
    }
}

/// Over a fixed family the elimination must also succeed, not just stay silent.
#[test]
fn elim_succeeds_on_singletons_and_flags() {
    let c = common::checker();
    let single = Scheme::mono(RefType::singleton(LVal::var("y")));
    let t = RefType(Formula::and(vec![
        Formula::eq(LVal::Nu, LVal::plus(LVal::var("x"), LVal::int(1))),
        Formula::has(LVal::var("x"), LVal::str("a")),
    ]));
    let got = c.elim("x", &single, &t).expect("singleton alias eliminates");
    assert!(got.free_vars().contains("y") && !got.free_vars().contains("x"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn if_types_are_sound_for_the_taken_branch(n1 in -50i64..50, n2 in -50i64..50, s in "[a-z]{0,3}", flip in any::<bool>()) {
        let e2 = if s.is_empty() { Value::int(n2) } else { Value::str(&s) };
        let (e1, e2) = (Value::int(n1), e2);
        let (e1, e2) = if flip { (e2, e1) } else { (e1, e2) };
        let e = Expr::If(Value::var("b"), Box::new(Expr::Val(e1.clone())), Box::new(Expr::Val(e2.clone())));
        let g = TypeEnv::new().bind("b", Scheme::mono(RefType::bool()));
        let mut c = shared().lock().unwrap();
        let Scheme::Mono(t) = c.synth(&g, &e).unwrap() else { panic!("polymorphic if") };
        for (b, w) in [(true, e1), (false, e2)] {
            let m = GroundModel::new(default_defs()).with("b", Value::bool(b));
            let p = ground_part(&t.0).subst_nu(&LVal::Val(w.clone()));
            prop_assert_eq!(eval_ground(&p, &m), Truth::True, "{} with b = {} and result {}", t, b, w);
        }
    }
}
