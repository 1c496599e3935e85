//! Equi-join plans: a partitioned hash join and a groupjoin, each with the
//! nested-loop term it must agree with.

use alloc::format;

use super::{binder_with, FrontendError, RowFn};
use crate::syntax::{cmp, if_then, key_of, let_in, lookup, mul, singleton, subst_proj, sum, val_of, var, CmpOp, Expr};
use crate::typecheck::{type_of, TypeEnv};
use crate::types::Type;
use crate::Name;

/// The per-pair result of a join, written over the probe entry `r` and the
/// build entry `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinBody {
    pub r: Name,
    pub s: Name,
    pub body: Expr,
}

fn row_type(env: &TypeEnv, e: &Expr) -> Result<Type, FrontendError> {
    match type_of(env, e)? {
        Type::Dict { key, .. } => Ok(*key),
        t => Err(FrontendError::new("type-mismatch", format!("join input has type {t}, not a relation"))),
    }
}

fn check_keys(
    env: &TypeEnv,
    probe: &Expr,
    build: &Expr,
    probe_key: &RowFn,
    build_key: &RowFn,
) -> Result<(), FrontendError> {
    let kt = |rel: &Expr, f: &RowFn| -> Result<Type, FrontendError> {
        let row = row_type(env, rel)?;
        Ok(type_of(&env.clone().with(f.var.clone(), row), &f.body)?)
    };
    let (a, b) = (kt(probe, probe_key)?, kt(build, build_key)?);
    if a != b {
        return Err(FrontendError::new("key-type-mismatch", format!("probe key has type {a}, build key {b}")));
    }
    Ok(())
}

/// Partition `build` by its join key, storing each row under the key
/// `project(row)` (the whole row by default), then probe it once per row
/// of `probe`:
///
/// `let Sp = sum(s in S) { kS(s.key) -> { p(s.key) -> s.val } } in
///  sum(r in R) sum(s in Sp(kR(r.key))) body`
///
/// Rows that `project` merges have their multiplicities added, so the body
/// must be linear in `s.val` when a projection is given.
pub fn build_hash_join(
    env: &TypeEnv,
    probe: Expr,
    build: Expr,
    probe_key: &RowFn,
    build_key: &RowFn,
    project: Option<&RowFn>,
    combine: &JoinBody,
) -> Result<Expr, FrontendError> {
    check_keys(env, &probe, &build, probe_key, build_key)?;
    let (r, s) = (&*combine.r, &*combine.s);
    let sp = binder_with("Sp", &[&probe, &build, &combine.body], &[probe_key, build_key]);
    let stored = project.map_or_else(|| key_of(s), |p| p.apply(&key_of(s)));
    let part = sum(s, build, singleton(build_key.apply(&key_of(s)), singleton(stored, val_of(s))));
    let probe_loop = sum(r, probe, sum(s, lookup(var(&sp), probe_key.apply(&key_of(r))), combine.body.clone()));
    let e = let_in(&sp, part, probe_loop);
    type_of(env, &e)?;
    Ok(e)
}

/// The same join as a filtered nested loop over both inputs.
pub fn nested_loop_join(
    probe: Expr,
    build: Expr,
    probe_key: &RowFn,
    build_key: &RowFn,
    project: Option<&RowFn>,
    combine: &JoinBody,
) -> Expr {
    let (r, s) = (&*combine.r, &*combine.s);
    let body = match project {
        Some(p) => subst_proj(combine.body.clone(), s, &p.apply(&key_of(s)), &val_of(s)),
        None => combine.body.clone(),
    };
    let cond = cmp(CmpOp::Eq, probe_key.apply(&key_of(r)), build_key.apply(&key_of(s)));
    sum(r, probe, sum(s, build, if_then(cond, body, None)))
}

/// Join and aggregate in one step: pre-aggregate `g` over `build` per key,
/// then look the partial aggregate up once per probe row.
///
/// `let Sagg = sum(s in S) { kS(s.key) -> g(s) } in
///  sum(r in R) { kR(r.key) -> f(r) * Sagg(kR(r.key)) }`
///
/// `f` and `g` receive whole entries, so they can read multiplicities.
pub fn build_groupjoin(
    env: &TypeEnv,
    probe: Expr,
    build: Expr,
    probe_key: &RowFn,
    build_key: &RowFn,
    f: &RowFn,
    g: &RowFn,
) -> Result<Expr, FrontendError> {
    check_keys(env, &probe, &build, probe_key, build_key)?;
    let (terms, fns) = ([&probe, &build], [probe_key, build_key, f, g]);
    let sagg = binder_with("Sagg", &terms, &fns);
    let s = binder_with("s", &terms, &fns);
    let r = binder_with("r", &terms, &fns);
    let agg = sum(&s, build, singleton(build_key.apply(&key_of(&s)), g.apply(&var(&s))));
    let k = probe_key.apply(&key_of(&r));
    let body = singleton(k.clone(), mul(f.apply(&var(&r)), lookup(var(&sagg), k)));
    let e = let_in(&sagg, agg, sum(&r, probe, body));
    type_of(env, &e)?;
    Ok(e)
}

/// The groupjoin as a nested loop:
/// `sum(r in R) sum(s in S) if (kR(r.key) == kS(s.key)) { kR(r.key) -> f(r) * g(s) }`.
pub fn groupjoin_oracle(probe: Expr, build: Expr, probe_key: &RowFn, build_key: &RowFn, f: &RowFn, g: &RowFn) -> Expr {
    let (terms, fns) = ([&probe, &build], [probe_key, build_key, f, g]);
    let s = binder_with("s", &terms, &fns);
    let r = binder_with("r", &terms, &fns);
    let k = probe_key.apply(&key_of(&r));
    let cond = cmp(CmpOp::Eq, k.clone(), build_key.apply(&key_of(&s)));
    let body = singleton(k, mul(f.apply(&var(&r)), g.apply(&var(&s))));
    sum(&r, probe, sum(&s, build, if_then(cond, body, None)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{eval, Environment};
    use crate::parse::{parse, parse_type, parse_value};
    use crate::pretty::pretty;
    use crate::value::values_equal;

    fn f(v: &str, body: &str) -> RowFn {
        RowFn::new(v, parse(body).unwrap())
    }

    fn env() -> Environment {
        let mut e = Environment::new();
        e.bind(
            "R",
            parse_value("{ <a=1, b=10> -> 1, <a=2, b=20> -> 2, <a=3, b=30> -> 1 }").unwrap(),
            parse_type("{ <a: int, b: int> -> int }").unwrap(),
        );
        e.bind(
            "S",
            parse_value("{ <a=1, c=5> -> 1, <a=1, c=6> -> 3, <a=2, c=7> -> 1 }").unwrap(),
            parse_type("{ <a: int, c: int> -> int }").unwrap(),
        );
        e
    }

    #[test]
    fn hash_join_matches_nested_loop() {
        let e = env();
        let body = JoinBody {
            r: "r".into(),
            s: "s".into(),
            body: parse("{ <a = r.key.a, b = r.key.b, c = s.key.c> -> r.val * s.val }").unwrap(),
        };
        let (kr, ks) = (f("x", "x.a"), f("x", "x.a"));
        let hj = build_hash_join(&e.type_env(), var("R"), var("S"), &kr, &ks, None, &body).unwrap();
        assert_eq!(
            pretty(&hj),
            "let Sp = sum(s in S) { s.key.a -> { s.key -> s.val } } in sum(r in R) sum(s in Sp(r.key.a)) { <a = r.key.a, b = r.key.b, c = s.key.c> -> r.val * s.val }"
        );
        let nl = nested_loop_join(var("R"), var("S"), &kr, &ks, None, &body);
        let want = parse_value("{ <a=1, b=10, c=5> -> 1, <a=1, b=10, c=6> -> 3, <a=2, b=20, c=7> -> 2 }").unwrap();
        assert!(values_equal(&eval(&e, &hj).unwrap(), &want));
        assert!(values_equal(&eval(&e, &nl).unwrap(), &want));
    }

    #[test]
    fn projected_build_side() {
        let e = env();
        let body = JoinBody { r: "r".into(), s: "s".into(), body: parse("{ r.key.b -> r.val * s.val * s.key.c }").unwrap() };
        let proj = f("x", "<c = x.c>");
        let (kr, ks) = (f("x", "x.a"), f("x", "x.a"));
        let hj = build_hash_join(&e.type_env(), var("R"), var("S"), &kr, &ks, Some(&proj), &body).unwrap();
        let nl = nested_loop_join(var("R"), var("S"), &kr, &ks, Some(&proj), &body);
        assert!(values_equal(&eval(&e, &hj).unwrap(), &eval(&e, &nl).unwrap()));
    }

    #[test]
    fn groupjoin_matches_oracle() {
        let e = env();
        let (kr, ks) = (f("x", "x.a"), f("x", "x.a"));
        let (fr, gs) = (f("r", "r.val * r.key.b"), f("s", "s.val * s.key.c"));
        let gj = build_groupjoin(&e.type_env(), var("R"), var("S"), &kr, &ks, &fr, &gs).unwrap();
        assert_eq!(
            pretty(&gj),
            "let Sagg = sum(s in S) { s.key.a -> s.val * s.key.c } in sum(r in R) { r.key.a -> r.val * r.key.b * Sagg(r.key.a) }"
        );
        let oracle = groupjoin_oracle(var("R"), var("S"), &kr, &ks, &fr, &gs);
        let want = parse_value("{ 1 -> 230, 2 -> 280 }").unwrap();
        assert!(values_equal(&eval(&e, &gj).unwrap(), &want));
        assert!(values_equal(&eval(&e, &oracle).unwrap(), &want));
    }

    #[test]
    fn key_types_must_agree() {
        let e = env();
        let body = JoinBody { r: "r".into(), s: "s".into(), body: parse("r.val * s.val").unwrap() };
        let err = build_hash_join(&e.type_env(), var("R"), var("S"), &f("x", "x.a"), &f("x", "x.a == 1"), None, &body)
            .unwrap_err();
        assert_eq!(err.code, "key-type-mismatch");
    }
}
