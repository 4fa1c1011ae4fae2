//! Type instantiation and the fold/unfold formulas of constructed data.

use crate::logic::embed_at;
use crate::syntax::*;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DataError {
    #[error("unknown type constructor `{0}`")]
    UnknownCtor(Name),
    #[error("`{ctor}` expects {expected} {what}, found {found}")]
    Arity {
        ctor: Name,
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

/// `Inst(·, A, T)`.
pub trait Inst: Sized {
    fn inst(&self, a: &str, t: &RefType) -> Self;
}

impl Inst for Formula {
    fn inst(&self, a: &str, t: &RefType) -> Formula {
        match self {
            Formula::HasType(lw, TypeTerm::TyVar(b, _)) if b == a => t.0.subst_nu(lw),
            Formula::HasType(lw, u) => Formula::HasType(lw.clone(), u.inst(a, t)),
            Formula::And(ps) => Formula::And(ps.iter().map(|p| p.inst(a, t)).collect()),
            Formula::Or(ps) => Formula::Or(ps.iter().map(|p| p.inst(a, t)).collect()),
            Formula::Not(p) => Formula::not(p.inst(a, t)),
            Formula::Implies(p, q) => Formula::implies(p.inst(a, t), q.inst(a, t)),
            Formula::Iff(p, q) => Formula::iff(p.inst(a, t), q.inst(a, t)),
            Formula::True | Formula::False | Formula::Pred(..) => self.clone(),
        }
    }
}

impl Inst for TypeTerm {
    fn inst(&self, a: &str, t: &RefType) -> TypeTerm {
        match self {
            TypeTerm::Arrow(x, t1, t2) => {
                TypeTerm::Arrow(x.clone(), Box::new(t1.inst(a, t)), Box::new(t2.inst(a, t)))
            }
            TypeTerm::Ctor(c, ts) => TypeTerm::Ctor(c.clone(), ts.iter().map(|u| u.inst(a, t)).collect()),
            TypeTerm::TyVar(..) | TypeTerm::Null => self.clone(),
        }
    }
}

impl Inst for RefType {
    fn inst(&self, a: &str, t: &RefType) -> RefType {
        RefType(self.0.inst(a, t))
    }
}

impl Inst for Scheme {
    fn inst(&self, a: &str, t: &RefType) -> Scheme {
        match self {
            Scheme::Mono(u) => Scheme::Mono(u.inst(a, t)),
            Scheme::Forall(b, _) if b == a => self.clone(),
            Scheme::Forall(b, s) => {
                if t.free_tyvars().contains(b) {
                    let mut avoid = t.free_tyvars();
                    avoid.extend(s.free_tyvars());
                    let b2 = freshen(b, &avoid);
                    let s2 = s.rename_tyvar(b, &b2);
                    Scheme::Forall(b2, Box::new(s2.inst(a, t)))
                } else {
                    Scheme::Forall(b.clone(), Box::new(s.inst(a, t)))
                }
            }
        }
    }
}

/// Instantiates the parameters `params` with `args` in succession.
pub fn inst_all<T: Inst + Clone>(x: &T, params: &[TypeParam], args: &[RefType]) -> T {
    params
        .iter()
        .zip(args)
        .fold(x.clone(), |acc, (p, t)| acc.inst(&p.name, t))
}

pub fn lookup<'a>(defs: &'a DefEnv, c: &str) -> Result<&'a DatatypeDef, DataError> {
    defs.get(c).ok_or_else(|| DataError::UnknownCtor(c.to_string()))
}

fn check_targs(d: &DatatypeDef, targs: &[RefType]) -> Result<(), DataError> {
    if d.params.len() != targs.len() {
        return Err(DataError::Arity {
            ctor: d.name.clone(),
            what: "type arguments",
            expected: d.params.len(),
            found: targs.len(),
        });
    }
    Ok(())
}

/// The field types of `C[T̄]`.
pub fn field_types(defs: &DefEnv, c: &str, targs: &[RefType]) -> Result<Vec<(String, RefType)>, DataError> {
    let d = lookup(defs, c)?;
    check_targs(d, targs)?;
    Ok(d.fields
        .iter()
        .map(|(f, t)| (f.clone(), inst_all(t, &d.params, targs)))
        .collect())
}

/// `Fold(C, T̄, w̄)`.
pub fn fold_formula(defs: &DefEnv, c: &str, targs: &[RefType], args: &[Value]) -> Result<Formula, DataError> {
    let d = lookup(defs, c)?;
    check_targs(d, targs)?;
    if d.fields.len() != args.len() {
        return Err(DataError::Arity {
            ctor: d.name.clone(),
            what: "fields",
            expected: d.fields.len(),
            found: args.len(),
        });
    }
    let mut ps = vec![
        Formula::ne(LVal::Nu, LVal::null()),
        Formula::tag_is(LVal::Nu, "Dict"),
        Formula::HasType(LVal::Nu, TypeTerm::Ctor(c.to_string(), targs.to_vec())),
    ];
    for ((f, _), w) in d.fields.iter().zip(args) {
        ps.push(Formula::eq(LVal::sel(LVal::Nu, LVal::str(f)), LVal::Val(w.clone())));
    }
    Ok(Formula::And(ps))
}

/// `Unfold(C, T̄)`.
pub fn unfold_formula(defs: &DefEnv, c: &str, targs: &[RefType]) -> Result<Formula, DataError> {
    let mut ps = vec![Formula::tag_is(LVal::Nu, "Dict")];
    for (f, t) in field_types(defs, c, targs)? {
        ps.push(embed_at(&t, &LVal::sel(LVal::Nu, LVal::str(&f))));
    }
    Ok(Formula::implies(Formula::ne(LVal::Nu, LVal::null()), Formula::And(ps)))
}

/// `ν ≠ null ⇒ has(ν, f)` for every field `f` of `C`.
pub fn field_presence(defs: &DefEnv, c: &str) -> Result<Formula, DataError> {
    let d = lookup(defs, c)?;
    let has = d
        .fields
        .iter()
        .map(|(f, _)| Formula::has(LVal::Nu, LVal::str(f)))
        .collect();
    Ok(Formula::implies(Formula::ne(LVal::Nu, LVal::null()), Formula::And(has)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_formula;

    #[test]
    fn inst_cases() {
        let int = RefType::int();
        assert_eq!(parse_formula("v :: A").unwrap().inst("A", &int), parse_formula("tag(v) = \"Int\"").unwrap());
        let b = parse_formula("v :: B").unwrap();
        assert_eq!(b.inst("A", &int), b);
    }

    #[test]
    fn unfold_list_int() {
        let got = unfold_formula(&default_defs(), "List", &[RefType::int()]).unwrap();
        let want = parse_formula(
            "v != null => (tag(v) = \"Dict\" /\\ tag(sel(v, \"hd\")) = \"Int\" /\\ sel(v, \"tl\") :: List[Int])",
        )
        .unwrap();
        assert_eq!(alpha_canonical_scheme(&Scheme::Mono(RefType(got))), alpha_canonical_scheme(&Scheme::Mono(RefType(want))));
    }

    #[test]
    fn unfold_top_field_is_true() {
        let got = unfold_formula(&default_defs(), "List", &[RefType::top()]).unwrap();
        let Formula::Implies(_, rhs) = got else { panic!() };
        let Formula::And(ps) = *rhs else { panic!() };
        assert_eq!(ps[1], Formula::True);
    }

    #[test]
    fn fold_list() {
        let f = fold_formula(&default_defs(), "List", &[RefType::int()], &[Value::int(1), Value::null()]).unwrap();
        assert_eq!(
            f,
            Formula::And(vec![
                Formula::ne(LVal::Nu, LVal::null()),
                Formula::tag_is(LVal::Nu, "Dict"),
                Formula::HasType(LVal::Nu, TypeTerm::Ctor("List".into(), vec![RefType::int()])),
                Formula::eq(LVal::sel(LVal::Nu, LVal::str("hd")), LVal::int(1)),
                Formula::eq(LVal::sel(LVal::Nu, LVal::str("tl")), LVal::null()),
            ])
        );
        assert!(matches!(
            fold_formula(&default_defs(), "List", &[RefType::int()], &[Value::int(1)]),
            Err(DataError::Arity { .. })
        ));
    }

    #[test]
    fn empty_ctor_fold() {
        let mut defs = default_defs();
        defs.insert("Unit".into(), DatatypeDef { name: "Unit".into(), params: vec![], fields: vec![] });
        let f = fold_formula(&defs, "Unit", &[], &[]).unwrap();
        let Formula::And(ps) = f else { panic!() };
        assert_eq!(ps.len(), 3);
        assert_eq!(unfold_formula(&defs, "Nope", &[]), Err(DataError::UnknownCtor("Nope".into())));
    }
}
