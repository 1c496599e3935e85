//! Scalar and grouped aggregates over a relation given as a dictionary from
//! rows to multiplicities.

use alloc::boxed::Box;
use alloc::format;

use super::{binder_with, FrontendError, RowFn};
use crate::syntax::{int, key_of, let_in, mul, record, singleton, sum, val_of, var, Expr};
use crate::typecheck::{type_of, TypeEnv};
use crate::types::{ScalarType, TaggedKind, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggKind {
    Sum,
    Count,
    Max,
    Min,
}

impl AggKind {
    pub fn name(self) -> &'static str {
        match self {
            AggKind::Sum => "sum",
            AggKind::Count => "count",
            AggKind::Max => "max",
            AggKind::Min => "min",
        }
    }

    pub fn from_name(s: &str) -> Option<AggKind> {
        [AggKind::Sum, AggKind::Count, AggKind::Max, AggKind::Min].into_iter().find(|k| k.name() == s)
    }

    fn tag(self) -> Option<TaggedKind> {
        match self {
            AggKind::Max => Some(TaggedKind::MaxSum),
            AggKind::Min => Some(TaggedKind::MinSum),
            _ => None,
        }
    }
}

fn relation_parts(env: &TypeEnv, input: &Expr) -> Result<(Type, Type), FrontendError> {
    match type_of(env, input)? {
        Type::Dict { key, val, .. } => Ok((*key, *val)),
        t => Err(FrontendError::new("schema-mismatch", format!("aggregate input has type {t}, not a relation"))),
    }
}

/// The per-row contribution `x.val * f(x.key)`, or the bare value for
/// max/min, which ignore multiplicities.
fn contribution(
    env: &TypeEnv,
    x: &str,
    row: &Type,
    mult: &Type,
    kind: AggKind,
    f: Option<&RowFn>,
) -> Result<Expr, FrontendError> {
    let fx = f.map(|f| f.apply(&key_of(x)));
    match (kind, fx) {
        (AggKind::Count, _) => Ok(if *mult == Type::BOOL { mul(val_of(x), int(1)) } else { val_of(x) }),
        (AggKind::Sum, Some(fx)) => Ok(mul(val_of(x), fx)),
        (AggKind::Max | AggKind::Min, Some(fx)) => {
            let env = env.clone().with(x, Type::record([("key", row.clone()), ("val", mult.clone())]));
            match type_of(&env, &fx)? {
                Type::Scalar(ScalarType::Real) => Ok(fx),
                Type::Scalar(s @ (ScalarType::Int | ScalarType::Bool)) => {
                    Ok(Expr::Promote(s, ScalarType::Real, Box::new(fx)))
                }
                t => Err(FrontendError::new(
                    "type-mismatch",
                    format!("{} needs a numeric argument, found {t}", kind.name()),
                )),
            }
        }
        (_, None) => Err(FrontendError::new("type-mismatch", format!("{} needs an argument", kind.name()))),
    }
}

fn tagged(kind: AggKind, e: Expr) -> Expr {
    match (kind.tag(), e) {
        (Some(t), Expr::Sum { var, src, body, .. }) => Expr::Sum { var, src, body, tag: Some(t) },
        (_, e) => e,
    }
}

/// `Γ_{∅;f}(e)`: `sum(x <- e) x.val * f(x.key)`.
pub fn lower_scalar_agg(env: &TypeEnv, input: Expr, kind: AggKind, f: Option<&RowFn>) -> Result<Expr, FrontendError> {
    let (row, mult) = relation_parts(env, &input)?;
    let fns: alloc::vec::Vec<&RowFn> = f.into_iter().collect();
    let x = binder_with("x", &[&input], &fns);
    let body = contribution(env, &x, &row, &mult, kind, f)?;
    Ok(tagged(kind, sum(&x, input, body)))
}

/// `Γ_{g;f}(e)`: aggregate into a temporary dictionary keyed by `g`, then
/// repack each entry as a `<key, val>` row of multiplicity one.
pub fn lower_group_agg(
    env: &TypeEnv,
    input: Expr,
    g: &RowFn,
    kind: AggKind,
    f: Option<&RowFn>,
) -> Result<Expr, FrontendError> {
    let (row, mult) = relation_parts(env, &input)?;
    let fns: alloc::vec::Vec<&RowFn> = f.into_iter().chain([g]).collect();
    let x = binder_with("x", &[&input], &fns);
    let body = contribution(env, &x, &row, &mult, kind, f)?;
    let tmp = binder_with("tmp", &[&input], &fns);
    // max/min groups stay tagged until repacked, so a group whose aggregate
    // is 0.0 is not mistaken for the real zero and dropped
    let Some(t) = kind.tag() else {
        let group = sum(&x, input, singleton(g.apply(&key_of(&x)), body));
        return Ok(let_in(&tmp, group, repack(&x, &tmp)));
    };
    let s = ScalarType::Tagged(t);
    let group = sum(&x, input, singleton(g.apply(&key_of(&x)), Expr::Wrap(s, Box::new(body))));
    let unwrapped = Expr::Unwrap(s, Box::new(val_of(&x)));
    Ok(let_in(&tmp, group, repack_with(&x, &tmp, unwrapped)))
}

/// `sum(x <- tmp) { <key=x.key, val=x.val> -> 1 }`.
pub(crate) fn repack(x: &str, tmp: &str) -> Expr {
    repack_with(x, tmp, val_of(x))
}

fn repack_with(x: &str, tmp: &str, val: Expr) -> Expr {
    sum(x, var(tmp), singleton(record([("key", key_of(x)), ("val", val)]), int(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{eval, Environment};
    use crate::parse::{parse, parse_type, parse_value};
    use crate::pretty::pretty;
    use crate::value::values_equal;

    fn env() -> Environment {
        let t = parse_type("{ <A: int, B: string> -> int }").unwrap();
        let r = parse_value(r#"{ <A=2, B="x"> -> 1, <A=3, B="y"> -> 2, <A=9, B="x"> -> 1 }"#).unwrap();
        Environment::new().with("R", r, t)
    }

    fn f(var: &str, body: &str) -> RowFn {
        RowFn::new(var, parse(body).unwrap())
    }

    #[test]
    fn sum_and_count_shapes() {
        let te = env().type_env();
        let s = lower_scalar_agg(&te, var("R"), AggKind::Sum, Some(&f("r", "r.A"))).unwrap();
        assert_eq!(pretty(&s), "sum(x in R) x.val * x.key.A");
        let c = lower_scalar_agg(&te, var("R"), AggKind::Count, None).unwrap();
        assert_eq!(pretty(&c), "sum(x in R) x.val");
        let g = lower_group_agg(&te, var("R"), &f("r", "r.B"), AggKind::Sum, Some(&f("r", "r.A"))).unwrap();
        assert_eq!(
            pretty(&g),
            "let tmp = sum(x in R) { x.key.B -> x.val * x.key.A } in sum(x in tmp) { <key = x.key, val = x.val> -> 1 }"
        );
    }

    #[test]
    fn values() {
        let e = env();
        let te = e.type_env();
        let run = |x: Expr| eval(&e, &x).unwrap();
        assert_eq!(run(lower_scalar_agg(&te, var("R"), AggKind::Sum, Some(&f("r", "r.A"))).unwrap()), crate::Value::Int(17));
        assert_eq!(run(lower_scalar_agg(&te, var("R"), AggKind::Count, None).unwrap()), crate::Value::Int(4));
        assert_eq!(run(lower_scalar_agg(&te, var("R"), AggKind::Max, Some(&f("r", "r.A"))).unwrap()), crate::Value::Real(9.0));
        assert_eq!(run(lower_scalar_agg(&te, var("R"), AggKind::Min, Some(&f("r", "r.A"))).unwrap()), crate::Value::Real(2.0));
        let g = lower_group_agg(&te, var("R"), &f("r", "r.B"), AggKind::Max, Some(&f("r", "r.A"))).unwrap();
        let want = parse_value(r#"{ <key="x", val=9.0> -> 1, <key="y", val=3.0> -> 1 }"#).unwrap();
        assert!(values_equal(&run(g), &want));
    }

    #[test]
    fn zero_valued_max_groups_are_kept() {
        let e = env();
        let te = e.type_env();
        let g = lower_group_agg(&te, var("R"), &f("r", "r.B"), AggKind::Max, Some(&f("r", "r.A * 0"))).unwrap();
        let want = parse_value(r#"{ <key="x", val=0.0> -> 1, <key="y", val=0.0> -> 1 }"#).unwrap();
        assert!(values_equal(&eval(&e, &g).unwrap(), &want));
    }

    #[test]
    fn count_over_sets_counts() {
        let t = parse_type("{ <A: int> -> bool }").unwrap();
        let r = parse_value("{ <A=1> -> true, <A=2> -> true }").unwrap();
        let e = Environment::new().with("S", r, t);
        let c = lower_scalar_agg(&e.type_env(), var("S"), AggKind::Count, None).unwrap();
        assert_eq!(eval(&e, &c).unwrap(), crate::Value::Int(2));
    }
}
