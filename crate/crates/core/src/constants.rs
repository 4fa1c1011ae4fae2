//! Types of constants and the tag table.

use crate::syntax::*;

fn v(x: &str) -> LVal {
    LVal::var(x)
}

fn arrow(x: &str, t1: RefType, t2: RefType) -> RefType {
    RefType::arrow(x, t1, t2)
}

fn bool_iff(p: Formula) -> RefType {
    RefType(Formula::and(vec![
        Formula::tag_is(LVal::Nu, "Bool"),
        Formula::iff(Formula::eq(LVal::Nu, LVal::bool(true)), p),
    ]))
}

/// The arrow type of a primitive, or `None` for the polymorphic `fix`.
pub fn prim_arrow(p: Prim) -> Option<RefType> {
    let int_op = |f: fn(LVal, LVal) -> LVal| {
        arrow(
            "x",
            RefType::int(),
            arrow(
                "y",
                RefType::int(),
                RefType(Formula::and(vec![
                    Formula::tag_is(LVal::Nu, "Int"),
                    Formula::eq(LVal::Nu, f(v("x"), v("y"))),
                ])),
            ),
        )
    };
    Some(match p {
        Prim::Plus => int_op(LVal::plus),
        Prim::Minus => int_op(LVal::minus),
        Prim::Eq => arrow(
            "x",
            RefType::top(),
            arrow("y", RefType::top(), bool_iff(Formula::eq(v("x"), v("y")))),
        ),
        Prim::Not => arrow(
            "x",
            RefType::bool(),
            RefType(Formula::and(vec![
                Formula::tag_is(LVal::Nu, "Bool"),
                Formula::iff(
                    Formula::eq(v("x"), LVal::bool(true)),
                    Formula::eq(LVal::Nu, LVal::bool(false)),
                ),
            ])),
        ),
        Prim::Tag => arrow("x", RefType::top(), RefType::singleton(LVal::tag(v("x")))),
        Prim::Has | Prim::Mem => arrow(
            "d",
            RefType::dict(),
            arrow("k", RefType::str(), bool_iff(Formula::has(v("d"), v("k")))),
        ),
        Prim::Get => arrow(
            "d",
            RefType::dict(),
            arrow(
                "k",
                RefType(Formula::and(vec![
                    Formula::tag_is(LVal::Nu, "Str"),
                    Formula::has(v("d"), LVal::Nu),
                ])),
                RefType::singleton(LVal::sel(v("d"), v("k"))),
            ),
        ),
        Prim::Set => arrow(
            "d",
            RefType::dict(),
            arrow(
                "k",
                RefType::str(),
                arrow(
                    "x",
                    RefType::top(),
                    RefType(Formula::and(vec![
                        Formula::tag_is(LVal::Nu, "Dict"),
                        Formula::eqmod(LVal::Nu, v("d"), v("k")),
                        Formula::has(LVal::Nu, v("k")),
                        Formula::eq(LVal::sel(LVal::Nu, v("k")), v("x")),
                    ])),
                ),
            ),
        ),
        Prim::Keys => arrow(
            "d",
            RefType::dict(),
            RefType::list(RefType(Formula::and(vec![
                Formula::tag_is(LVal::Nu, "Str"),
                Formula::has(v("d"), LVal::Nu),
            ]))),
        ),
        Prim::Fix => return None,
    })
}

/// `∀A. (A → A) → A`.
pub fn fix_type() -> RefType {
    arrow("f", arrow("_", RefType::tyvar("A"), RefType::tyvar("A")), RefType::tyvar("A"))
}

/// The scheme `ty(c)` of a constant.
pub fn const_type(c: &Const) -> Scheme {
    let this = LVal::Val(Value::Const(c.clone()));
    match c {
        Const::Prim(Prim::Fix) => Scheme::Forall(
            "A".into(),
            Box::new(Scheme::Mono(RefType(Formula::and(vec![Formula::eq(LVal::Nu, this), fix_type().0])))),
        ),
        Const::Prim(p) => {
            let u = prim_arrow(*p).expect("monomorphic primitive");
            Scheme::Mono(RefType(Formula::and(vec![Formula::eq(LVal::Nu, this), u.0])))
        }
        Const::Null => Scheme::Mono(RefType(Formula::and(vec![
            Formula::eq(LVal::Nu, this),
            Formula::has_type(LVal::Nu, TypeTerm::Null),
        ]))),
        _ => Scheme::Mono(RefType::singleton(this)),
    }
}

/// The dynamic type tag of a closed value, or `None` for variables.
pub fn tag_of(w: &Value) -> Option<&'static str> {
    Some(match w {
        Value::Var(_) => return None,
        Value::Const(c) => match c {
            Const::Int(_) => "Int",
            Const::Bool(_) => "Bool",
            Const::Str(_) => "Str",
            Const::Null => "Null",
            Const::EmptyDict => "Dict",
            Const::Prim(_) | Const::Partial(..) => "Fun",
        },
        Value::Extend(..) | Value::New(..) => "Dict",
        Value::Fun(..) => "Fun",
        Value::TFun(..) => "TFun",
    })
}

/// Every tag string the tag table can produce.
pub const TAGS: [&str; 7] = ["Int", "Bool", "Str", "Null", "Dict", "Fun", "TFun"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_types_are_singletons() {
        assert_eq!(const_type(&Const::Int(1)).to_string(), "{v | v = 1}");
    }

    #[test]
    fn get_signature() {
        assert_eq!(
            prim_arrow(Prim::Get).unwrap().to_string(),
            "d:Dict -> k:{v | tag(v) = \"Str\" /\\ has(d, v)} -> {v | v = sel(d, k)}"
        );
    }

    #[test]
    fn keys_signature() {
        assert_eq!(
            prim_arrow(Prim::Keys).unwrap().to_string(),
            "d:Dict -> List[{v | tag(v) = \"Str\" /\\ has(d, v)}]"
        );
    }

    #[test]
    fn normal_form_for_functions() {
        let s = const_type(&Const::Prim(Prim::Not));
        let t = s.as_mono().unwrap();
        match &t.0 {
            Formula::And(ps) => {
                assert_eq!(ps[0], Formula::eq(LVal::Nu, LVal::Val(Value::prim(Prim::Not))));
                assert!(matches!(ps[1], Formula::HasType(LVal::Nu, TypeTerm::Arrow(..))));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn tag_table() {
        assert_eq!(tag_of(&Value::bool(true)), Some("Bool"));
        assert_eq!(tag_of(&Value::int(3)), Some("Int"));
        assert_eq!(tag_of(&Value::prim(Prim::Plus)), Some("Fun"));
        assert_eq!(tag_of(&Value::extend(Value::empty(), Value::str("a"), Value::int(1))), Some("Dict"));
        assert_eq!(tag_of(&Value::var("x")), None);
    }
}
