//! Binder renaming and A-normalization of surface expressions.

use std::collections::{BTreeMap, HashMap};

use crate::syntax::*;

use super::parser::{desugar_mono, desugar_type, SExpr, SKind, SParam, STy};
use super::{FrontendError, Pos};

type LResult<T> = Result<T, FrontendError>;

#[derive(Default)]
struct Lowerer {
    uses: HashMap<String, usize>,
    scope: Vec<(String, Name)>,
    tmp: usize,
    positions: BTreeMap<Name, Pos>,
}

fn wrap(binds: Vec<(Name, Expr)>, core: Expr) -> Expr {
    binds
        .into_iter()
        .rev()
        .fold(core, |acc, (x, e)| flat_let(x, None, e, acc))
}

/// `let x = (let y = e1 in e2) in e3` becomes `let y = e1 in let x = e2 in e3`.
fn flat_let(x: Name, ann: Option<Scheme>, rhs: Expr, body: Expr) -> Expr {
    match rhs {
        Expr::Let(y, ann_y, e1, e2) => Expr::Let(y, ann_y, e1, Box::new(flat_let(x, ann, *e2, body))),
        rhs => Expr::Let(x, ann, Box::new(rhs), Box::new(body)),
    }
}

impl Lowerer {
    /// Introduces a binder; the first binder with a given name keeps it, later ones get `name~k`.
    fn bind(&mut self, x: &str, pos: Pos) -> Name {
        let n = self.uses.entry(x.to_string()).or_insert(0);
        let name = if *n == 0 {
            x.to_string()
        } else {
            format!("{x}~{n}")
        };
        *n += 1;
        self.scope.push((x.to_string(), name.clone()));
        self.positions.insert(name.clone(), pos);
        name
    }

    fn unbind(&mut self, n: usize) {
        for _ in 0..n {
            self.scope.pop();
        }
    }

    fn lookup(&self, x: &str, pos: Pos) -> LResult<Name> {
        self.scope
            .iter()
            .rev()
            .find(|(s, _)| s == x)
            .map(|(_, n)| n.clone())
            .ok_or_else(|| FrontendError::Unbound {
                pos,
                name: x.to_string(),
            })
    }

    fn fresh_tmp(&mut self, pos: Pos) -> Name {
        let t = format!("tmp~{}", self.tmp);
        self.tmp += 1;
        self.positions.insert(t.clone(), pos);
        t
    }

    fn rename_free<T: Subst + FreeVars>(&self, t: T, pos: Pos) -> LResult<T> {
        let mut out = t;
        for y in out.free_vars() {
            let target = self.lookup(&y, pos)?;
            if target != y {
                out = out.subst(&y, &Value::Var(target));
            }
        }
        Ok(out)
    }

    fn ty(&self, t: &STy, pos: Pos) -> LResult<RefType> {
        self.rename_free(desugar_mono(t, pos)?, pos)
    }

    fn scheme(&self, t: &STy, pos: Pos) -> LResult<Scheme> {
        self.rename_free(desugar_type(t, pos)?, pos)
    }

    fn expr(&mut self, e: &SExpr) -> LResult<Expr> {
        let mut binds = Vec::new();
        let core = self.expr_in(e, &mut binds)?;
        Ok(wrap(binds, core))
    }

    /// Lowers `e`, hoisting evaluated operands into `binds`.
    fn expr_in(&mut self, e: &SExpr, binds: &mut Vec<(Name, Expr)>) -> LResult<Expr> {
        match &e.kind {
            SKind::App(f, a) => {
                let vf = self.value(f, binds)?;
                let va = self.value(a, binds)?;
                Ok(Expr::App(vf, va))
            }
            SKind::TApp(f, t) => {
                let vf = self.value(f, binds)?;
                Ok(Expr::TApp(vf, self.ty(t, e.pos)?))
            }
            SKind::Get(d, k) => {
                let vd = self.value(d, binds)?;
                let vk = self.value(k, binds)?;
                let t = self.fresh_tmp(e.pos);
                binds.push((t.clone(), Expr::App(Value::prim(Prim::Get), vd)));
                Ok(Expr::App(Value::Var(t), vk))
            }
            SKind::Binop(op, a, b) => {
                let va = self.value(a, binds)?;
                let vb = self.value(b, binds)?;
                let t = self.fresh_tmp(e.pos);
                binds.push((t.clone(), Expr::App(Value::prim(*op), va)));
                Ok(Expr::App(Value::Var(t), vb))
            }
            SKind::If(c, t, f) => {
                let vc = self.value(c, binds)?;
                let t = self.expr(t)?;
                let f = self.expr(f)?;
                Ok(Expr::If(vc, Box::new(t), Box::new(f)))
            }
            SKind::Let {
                recursive,
                name,
                params,
                ann,
                rhs,
                body,
            } => self.let_expr(*recursive, name, params, ann.as_ref(), rhs, body, e.pos),
            _ => Ok(Expr::Val(self.value(e, binds)?)),
        }
    }

    fn value(&mut self, e: &SExpr, binds: &mut Vec<(Name, Expr)>) -> LResult<Value> {
        Ok(match &e.kind {
            SKind::Var(x) => Value::Var(self.lookup(x, e.pos)?),
            SKind::Int(n) => Value::int(*n),
            SKind::Str(s) => Value::str(s),
            SKind::Bool(b) => Value::bool(*b),
            SKind::Null => Value::null(),
            SKind::Prim(p) => Value::prim(*p),
            SKind::Dict(entries) => {
                let mut d = Value::empty();
                for (k, v) in entries {
                    let w = self.value(v, binds)?;
                    d = Value::extend(d, Value::str(k), w);
                }
                d
            }
            SKind::Fun(params, body) => self.lambda(params, body)?,
            SKind::New(c, targs, args) => {
                let targs = match targs {
                    Some(ts) => Some(
                        ts.iter()
                            .map(|t| self.ty(t, e.pos))
                            .collect::<LResult<Vec<_>>>()?,
                    ),
                    None => None,
                };
                let mut ws = Vec::new();
                for a in args {
                    ws.push(self.value(a, binds)?);
                }
                Value::New(c.clone(), targs, ws)
            }
            _ => {
                let ex = self.expr_in(e, binds)?;
                let t = self.fresh_tmp(e.pos);
                binds.push((t.clone(), ex));
                Value::Var(t)
            }
        })
    }

    fn lambda(&mut self, params: &[SParam], body: &SExpr) -> LResult<Value> {
        enum P {
            Var(Name, Option<RefType>),
            Ty(Name),
        }
        let mut ps = Vec::new();
        let mut bound = 0;
        for p in params {
            match p {
                SParam::Var(x, ann, pos) => {
                    let t = ann.as_ref().map(|t| self.ty(t, *pos)).transpose()?;
                    let x2 = self.bind(x, *pos);
                    bound += 1;
                    ps.push(P::Var(x2, t));
                }
                SParam::TyVar(a) => ps.push(P::Ty(a.clone())),
            }
        }
        let mut core = self.expr(body)?;
        self.unbind(bound);
        let mut last: Option<Value> = None;
        for p in ps.into_iter().rev() {
            let inner = match last.take() {
                Some(v) => Expr::Val(v),
                None => std::mem::replace(&mut core, Expr::Val(Value::null())),
            };
            last = Some(match p {
                P::Var(x, t) => Value::Fun(x, t.map(Box::new), Box::new(inner)),
                P::Ty(a) => Value::TFun(a, Box::new(inner)),
            });
        }
        Ok(last.expect("lambda with no parameters"))
    }

    #[allow(clippy::too_many_arguments)]
    fn let_expr(
        &mut self,
        recursive: bool,
        name: &str,
        params: &[SParam],
        ann: Option<&STy>,
        rhs: &SExpr,
        body: &SExpr,
        pos: Pos,
    ) -> LResult<Expr> {
        let mut vars = Vec::new();
        for p in params {
            match p {
                SParam::Var(x, t, ppos) => vars.push((x.clone(), t.clone(), *ppos)),
                SParam::TyVar(_) => {
                    return Err(FrontendError::Malformed {
                        pos,
                        msg: "type parameters are not allowed here".into(),
                    })
                }
            }
        }
        let annotated = vars.iter().filter(|(_, t, _)| t.is_some()).count();
        if annotated > 0 && annotated < vars.len() {
            return Err(FrontendError::Malformed {
                pos,
                msg: format!("parameters of `{name}` must be either all annotated or none"),
            });
        }
        let all_ann = !vars.is_empty() && annotated == vars.len();
        if recursive && ann.is_none() {
            return Err(FrontendError::Malformed {
                pos,
                msg: format!("recursive binding `{name}` needs a type annotation"),
            });
        }

        let mut scheme = match ann {
            Some(t) if !all_ann => Some(self.scheme(t, pos)?),
            _ => None,
        };
        let inner = if recursive {
            Some(self.bind(name, pos))
        } else {
            None
        };
        let mut binders = Vec::new();
        for (x, t, ppos) in &vars {
            let t = t.as_ref().map(|t| self.ty(t, *ppos)).transpose()?;
            binders.push((self.bind(x, *ppos), t));
        }
        if all_ann {
            if let Some(r) = ann {
                if matches!(r, STy::Forall(..)) {
                    return Err(FrontendError::Malformed {
                        pos,
                        msg: "a polymorphic signature must be written `let f :: forall ... = ...`"
                            .into(),
                    });
                }
                let mut acc = self.ty(r, pos)?;
                for (x, t) in binders.iter().rev() {
                    acc = RefType::arrow(x, t.clone().unwrap(), acc);
                }
                scheme = Some(Scheme::Mono(acc));
            }
        }
        let mut core = self.expr(rhs)?;
        let lambda_ann = all_ann && ann.is_none();
        for (x, t) in binders.iter().rev() {
            let t = if lambda_ann { t.clone() } else { None };
            core = Expr::Val(Value::Fun(x.clone(), t.map(Box::new), Box::new(core)));
        }
        self.unbind(binders.len());

        let (tyvars, mono) = match &scheme {
            Some(s) => split_scheme(s),
            None => (Vec::new(), None),
        };
        if let Some(f_inner) = inner {
            self.unbind(1);
            let t = mono.clone().expect("recursive binding has a scheme");
            let fix = self.fresh_tmp(pos);
            core = Expr::Let(
                fix.clone(),
                None,
                Box::new(Expr::TApp(Value::prim(Prim::Fix), t)),
                Box::new(Expr::App(
                    Value::Var(fix),
                    Value::Fun(f_inner, None, Box::new(core)),
                )),
            );
        }
        if !tyvars.is_empty() && !matches!(core, Expr::Val(Value::TFun(..))) {
            for a in tyvars.iter().rev() {
                core = Expr::Val(Value::TFun(a.clone(), Box::new(core)));
            }
        }

        let outer = self.bind(name, pos);
        let body = self.expr(body)?;
        self.unbind(1);
        Ok(flat_let(outer, scheme, core, body))
    }
}

fn split_scheme(s: &Scheme) -> (Vec<Name>, Option<RefType>) {
    let mut vars = Vec::new();
    let mut cur = s;
    while let Scheme::Forall(a, body) = cur {
        vars.push(a.clone());
        cur = body;
    }
    (vars, cur.as_mono().cloned())
}

pub fn lower_program(e: &SExpr) -> LResult<(Expr, BTreeMap<Name, Pos>)> {
    let mut l = Lowerer::default();
    let body = l.expr(e)?;
    Ok((body, l.positions))
}

/// Renames binders apart and puts a surface expression into A-normal form.
pub fn anf_normalize(e: &SExpr) -> LResult<Expr> {
    lower_program(e).map(|(e, _)| e)
}

/// Whether every application, guard and instantiation operand is a value.
pub fn is_anf(e: &Expr) -> bool {
    fn value_ok(w: &Value) -> bool {
        match w {
            Value::Fun(_, _, body) | Value::TFun(_, body) => is_anf(body),
            Value::Extend(a, b, c) => value_ok(a) && value_ok(b) && value_ok(c),
            Value::New(_, _, ws) => ws.iter().all(value_ok),
            _ => true,
        }
    }
    match e {
        Expr::Val(w) => value_ok(w),
        Expr::App(a, b) => value_ok(a) && value_ok(b),
        Expr::TApp(w, _) => value_ok(w),
        Expr::If(w, a, b) => value_ok(w) && is_anf(a) && is_anf(b),
        Expr::Let(_, _, a, b) => is_anf(a) && is_anf(b),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn lower(s: &str) -> Expr {
        anf_normalize(&parse(s).unwrap().body).unwrap()
    }

    #[test]
    fn nested_application_is_hoisted() {
        let e = lower("fun f g x -> f (g x)");
        assert_eq!(
            e.to_string(),
            "fun f -> fun g -> fun x -> let tmp~0 = g x in f tmp~0"
        );
    }

    #[test]
    fn get_sugar_and_addition() {
        let e = lower("fun t c -> t[c] + 1");
        assert_eq!(
            e.to_string(),
            "fun t -> fun c -> let tmp~0 = get t in let tmp~1 = tmp~0 c in let tmp~2 = (+) tmp~1 in tmp~2 1"
        );
    }

    #[test]
    fn values_stay_values() {
        assert_eq!(
            lower("{\"a\": 1}"),
            Expr::Val(Value::extend(
                Value::empty(),
                Value::str("a"),
                Value::int(1)
            ))
        );
    }

    #[test]
    fn shadowed_binders_get_distinct_names() {
        let e = lower("let x = 1 in let x = x in x");
        assert_eq!(e.to_string(), "let x = 1 in let x~1 = x in x~1");
    }

    #[test]
    fn annotated_params_build_the_scheme() {
        let e = lower("let neg (x :: IorB) :: {v | tag(v) = tag(x)} = x in neg");
        match e {
            Expr::Let(_, Some(s), rhs, _) => {
                assert_eq!(s.to_string(), "x:IorB -> {v | tag(v) = tag(x)}");
                assert_eq!(rhs.to_string(), "fun x -> x");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn recursive_let_goes_through_fix() {
        let e = lower("let rec loop :: Int -> Int = fun x -> loop x in loop 0");
        assert_eq!(
            e.to_string(),
            "let tmp~0 = fix [Int -> Int] in let loop~1 :: Int -> Int = tmp~0 (fun loop -> fun x -> loop x) in loop~1 0"
        );
    }

    #[test]
    fn polymorphic_signature_inserts_type_abstractions() {
        let e = lower("let id :: forall A. A -> A = fun x -> x in id");
        match e {
            Expr::Let(_, _, rhs, _) => assert_eq!(rhs.to_string(), "fun [A] -> fun x -> x"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unbound_variable_is_reported() {
        let err = anf_normalize(&parse("let x = y in x").unwrap().body).unwrap_err();
        assert!(matches!(err, FrontendError::Unbound { .. }));
    }

    #[test]
    fn output_is_anf() {
        let e = lower("fun f -> if f (f 1) then f 2 + f 3 else {\"k\": f 4}");
        assert!(is_anf(&e));
    }
}
