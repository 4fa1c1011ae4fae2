use std::collections::BTreeSet;

use duckcheck_core::logic::embed_type;
use duckcheck_core::syntax::FreeVars;
use duckcheck_core::wf::{check_type, check_typedef, poles_type, Polarity};
use duckcheck_core::*;
use proptest::prelude::*;

fn defs() -> DefEnv {
    load_program("type Sink[-A] { put: A -> Int } 0").expect("typedef loads").defs
}

fn poly_type() -> impl Strategy<Value = RefType> {
    let leaf = prop_oneof![
        Just(RefType::tyvar("A")),
        Just(RefType::tyvar("B")),
        Just(RefType::int()),
        Just(RefType::top()),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| RefType::arrow("y", a, b)),
            inner.clone().prop_map(RefType::list),
            inner.clone().prop_map(|t| RefType::of_term(TypeTerm::Ctor("Sink".into(), vec![t]))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| RefType(Formula::or(vec![a.0, b.0]))),
            inner.prop_map(|t| RefType(Formula::and(vec![Formula::tag_is(LVal::Nu, "Dict"), t.0]))),
        ]
    })
}

fn scoped_type() -> impl Strategy<Value = RefType> {
    let var = prop::sample::select(vec!["x", "y", "z"]);
    let atom = prop_oneof![
        var.clone().prop_map(|x| RefType::singleton(LVal::var(x))),
        var.clone().prop_map(|x| RefType(Formula::has(LVal::var(x), LVal::Nu))),
        Just(RefType::int()),
    ];
    atom.prop_recursive(3, 12, 2, move |inner| {
        prop_oneof![
            (var.clone(), inner.clone(), inner.clone()).prop_map(|(x, a, b)| RefType::arrow(x, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| RefType(Formula::and(vec![a.0, b.0]))),
            inner.prop_map(RefType::list),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn negating_the_start_polarity_flips_every_pole(t in poly_type()) {
        let defs = defs();
        for a in ["A", "B"] {
            let pos = poles_type(&defs, a, Polarity::Pos, &t);
            let neg = poles_type(&defs, a, Polarity::Neg, &t);
            let flipped: BTreeSet<Polarity> = pos.iter().map(|p| p.flip()).collect();
            prop_assert_eq!(neg, flipped);
        }
    }

    #[test]
    fn accepted_types_only_mention_bound_variables(t in scoped_type(), mask in 0u8..8) {
        let mut g = TypeEnv::new();
        for (i, x) in ["x", "y", "z"].iter().enumerate() {
            if mask & (1 << i) != 0 {
                g = g.bind(x, Scheme::mono(RefType::dict()));
            }
        }
        let s = Scheme::mono(t);
        if check_type(&default_defs(), &g, &s).is_ok() {
            let bound: BTreeSet<Name> = g.var_names().cloned().collect();
            let free = embed_type(&s).free_vars();
            prop_assert!(free.is_subset(&bound), "{} accepted in {:?}", s, bound);
        }
    }
}

#[test]
fn builtin_list_is_well_formed() {
    let d = default_defs();
    assert_eq!(check_typedef(&d, &DatatypeDef::builtin_list()), Ok(()));
}
