mod common;

use std::collections::{BTreeMap, BTreeSet};

use duckcheck_core::logic::{embed_env, instantiate_axioms, BoxTable, Terms, DEFAULT_INSTANCE_CAP};
use duckcheck_core::*;
use proptest::prelude::*;

/// Eight opaque atoms: four ordinary predicates and four type predicates.
fn atoms() -> Vec<Formula> {
    let mut v: Vec<Formula> = (0..4).map(|i| Formula::eq(LVal::var(&format!("x{i}")), LVal::int(i))).collect();
    v.push(Formula::has_type(LVal::var("x0"), TypeTerm::Null));
    v.push(Formula::has_type(LVal::var("x1"), TypeTerm::TyVar("A".into(), false)));
    v.push(Formula::has_type(
        LVal::Nu,
        TypeTerm::Arrow("y".into(), Box::new(RefType::int()), Box::new(RefType::int())),
    ));
    v.push(Formula::has_type(LVal::var("x2"), TypeTerm::Ctor("List".into(), vec![RefType::int()])));
    v
}

fn prop_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        8 => (0..8usize).prop_map(|i| atoms()[i].clone()),
        1 => Just(Formula::True),
        1 => Just(Formula::False),
    ];
    leaf.prop_recursive(4, 40, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 0..4).prop_map(Formula::Or),
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::iff(a, b)),
        ]
    })
}

fn truth(p: &Formula, val: &BTreeMap<Formula, bool>) -> bool {
    match p {
        Formula::True => true,
        Formula::False => false,
        Formula::And(ps) => ps.iter().all(|q| truth(q, val)),
        Formula::Or(ps) => ps.iter().any(|q| truth(q, val)),
        Formula::Not(q) => !truth(q, val),
        Formula::Implies(a, b) => !truth(a, val) || truth(b, val),
        Formula::Iff(a, b) => truth(a, val) == truth(b, val),
        atom => *val.get(atom).unwrap_or_else(|| panic!("unexpected atom {atom}")),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5000))]

    #[test]
    fn clauses_are_equivalent_to_the_formula(p in prop_formula()) {
        let clauses = normalize(&p).unwrap();
        let conj = Formula::And(clauses.iter().map(Clause::to_formula).collect());
        let atoms = atoms();
        for bits in 0u32..(1 << atoms.len()) {
            let val: BTreeMap<Formula, bool> =
                atoms.iter().enumerate().map(|(i, a)| (a.clone(), bits & (1 << i) != 0)).collect();
            prop_assert_eq!(truth(&p, &val), truth(&conj, &val), "assignment {:08b}", bits);
        }
    }
}

fn query(d1: Value, d2: Value, k1: Value, k2: Value) -> Formula {
    let (x, y) = (LVal::var("x"), LVal::var("y"));
    Formula::and(vec![
        Formula::has(x.clone(), LVal::Val(k1.clone())),
        Formula::eq(LVal::sel(y.clone(), LVal::Val(k2.clone())), LVal::int(0)),
        Formula::eqmod(x.clone(), y.clone(), LVal::Val(k1.clone())),
        Formula::eqmod(y, LVal::Val(d2), LVal::Val(k2.clone())),
        Formula::eq(x, LVal::Val(Value::extend(d1, k1, Value::int(7)))),
        Formula::has(LVal::Val(Value::empty()), LVal::Val(k2)),
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn axiom_instances_hold_on_concrete_dictionaries(
        dx in common::dict(), dy in common::dict(), d1 in common::dict(), d2 in common::dict(),
        k1 in common::key(), k2 in common::key(),
    ) {
        let p = query(d1, d2, k1, k2);
        let instances = instantiate_axioms(&Terms::collect(&[&p]), DEFAULT_INSTANCE_CAP).unwrap();
        prop_assert!(!instances.is_empty());
        let m = GroundModel::new(default_defs()).with("x", dx).with("y", dy);
        for ax in &instances {
            let ax = &eval::ground_part(ax);
            let t = eval_ground(ax, &m);
            prop_assert_ne!(t, Truth::False, "{} is false", ax);
            // Only selections of absent keys are left unspecified.
            if t == Truth::Stuck {
                prop_assert!(ax.to_string().contains("sel") || ax.to_string().contains('['), "{} is stuck", ax);
            }
        }
    }

    #[test]
    fn boxing_is_injective_on_canonical_forms(ts in prop::collection::vec(common::reftype(), 1..8)) {
        let mut table = BoxTable::new();
        let terms: Vec<TypeTerm> = ts
            .into_iter()
            .map(|t| TypeTerm::Arrow("z".into(), Box::new(t.clone()), Box::new(t)))
            .collect();
        let ids: Vec<usize> = terms.iter().map(|u| table.box_id(u)).collect();
        for (i, a) in terms.iter().enumerate() {
            for (j, b) in terms.iter().enumerate() {
                let same = syntax::alpha_canonical(a) == syntax::alpha_canonical(b);
                prop_assert_eq!(same, ids[i] == ids[j]);
            }
        }
        let distinct: BTreeSet<_> = terms.iter().map(syntax::alpha_canonical).collect();
        prop_assert_eq!(table.len(), distinct.len());
    }

    #[test]
    fn embedding_erases_polymorphism(ts in prop::collection::vec(common::reftype(), 0..4), s in common::scheme()) {
        let mut g = TypeEnv::new();
        for (i, t) in ts.into_iter().enumerate() {
            g = g.bind(&format!("x{i}"), Scheme::mono(t));
        }
        prop_assert_eq!(embed_env(&g.tyvar("A")), embed_env(&g));
        let poly = Scheme::forall(&["B"], s);
        prop_assert_eq!(embed_env(&g.bind("f", poly)), embed_env(&g));
    }
}
