use super::*;
use crate::interp::{eval_with_metrics, Environment};
use crate::parse::{parse, parse_type, parse_value};
use crate::pretty::pretty;
use crate::syntax::alpha_eq;
use crate::value::values_equal;

fn env(bindings: &[(&str, &str, &str)]) -> Environment {
    let mut env = Environment::new();
    for (n, v, t) in bindings {
        env.bind(*n, parse_value(v).unwrap(), parse_type(t).unwrap());
    }
    env
}

fn assert_form(tenv: &TypeEnv, got: &Expr, want: &str) {
    let (want, _) = typecheck(tenv, &parse(want).unwrap()).unwrap();
    assert!(alpha_eq(got, &want), "got  {}\nwant {}", pretty(got), pretty(&want));
}

/// Optimize, check the expected shape, and compare value and loop count
/// against the original.
fn check(env: &Environment, src: &str, want: &str) -> (u64, u64) {
    let tenv = env.type_env();
    let e = parse(src).unwrap();
    let out = optimize(&tenv, &e, &RewriteConfig::default()).unwrap();
    assert!(out.converged);
    assert_form(&tenv, &out.expr, want);
    assert_eq!(type_of(&tenv, &out.expr).unwrap(), out.ty);
    let (v0, m0) = eval_with_metrics(env, &e).unwrap();
    let (v1, m1) = eval_with_metrics(env, &out.expr).unwrap();
    assert!(values_equal(&v0, &v1), "{v0} vs {v1}");
    (m0.loop_iterations, m1.loop_iterations)
}

fn relation() -> Environment {
    env(&[("R", "{ 1 -> 2, 2 -> 1, 4 -> 3, 7 -> 1 }", "{ int -> int }")])
}

#[test]
fn map_map_fuses() {
    let (before, after) = check(
        &relation(),
        "let R1 = sum(r in R) { r.key + 1 -> r.val } in sum(r1 in R1) { r1.key * 2 -> r1.val }",
        "sum(r in R) { (r.key + 1) * 2 -> r.val }",
    );
    assert!(after < before);
}

#[test]
fn map_map_is_the_key_rule() {
    let tenv = relation().type_env();
    let e = parse("let R1 = sum(r in R) { r.key + 1 -> r.val } in sum(r1 in R1) { r1.key * 2 -> r1.val }").unwrap();
    let out = optimize(&tenv, &e, &RewriteConfig::only(&[Rule::VerticalKey])).unwrap();
    assert_eq!(out.events.iter().map(|e| e.rule).collect::<Vec<_>>(), ["vertical-key"]);
}

#[test]
fn filter_filter_fuses() {
    let (before, after) = check(
        &relation(),
        "let R1 = sum(r in R) if(r.key < 5) then { r.key -> r.val } else { } in \
         sum(r1 in R1) if(r1.key > 1) then { r1.key -> r1.val } else { }",
        "sum(r in R) { r.key -> promote_{bool,int}(1 < r.key) * (promote_{bool,int}(r.key < 5) * r.val) }",
    );
    assert!(after < before);
}

#[test]
fn hadamard_of_three_fuses() {
    let env = env(&[
        ("V1", "{ 0 -> 1.0, 1 -> 2.0, 2 -> 3.0 }", "{ int -> real }"),
        ("V2", "{ 0 -> 4.0, 2 -> 6.0 }", "{ int -> real }"),
        ("V3", "{ 0 -> 0.5, 1 -> 8.0, 2 -> 2.0 }", "{ int -> real }"),
    ]);
    let (before, after) = check(
        &env,
        "let Vt = sum(x in V1) { x.key -> x.val * V2(x.key) } in sum(x1 in Vt) { x1.key -> x1.val * V3(x1.key) }",
        "sum(x in V1) { x.key -> x.val * V2(x.key) * V3(x.key) }",
    );
    assert!(after < before);
}

#[test]
fn average_fuses_horizontally() {
    let env = env(&[("R", "{ <A = 1.5> -> 2, <A = 4.0> -> 1 }", "{ <A: real> -> int }")]);
    let (before, after) = check(
        &env,
        "let Rsum = sum(r in R) r.key.A * r.val in let Rcount = sum(r in R) r.val in Rsum / Rcount",
        "let RsumRcount = sum(r in R) < Rsum = r.key.A * r.val, Rcount = r.val > in RsumRcount.Rsum / RsumRcount.Rcount",
    );
    assert!(after < before);
}

#[test]
fn three_aggregates_become_one_record() {
    let env = env(&[("R", "{ 1 -> 2, 3 -> 1 }", "{ int -> int }")]);
    let tenv = env.type_env();
    let src = "let a = sum(r in R) r.val in let b = sum(r in R) r.key * r.val in let c = sum(r in R) r.key in a + b + c";
    let out = optimize(&tenv, &parse(src).unwrap(), &RewriteConfig::default()).unwrap();
    let Expr::Let(_, s, _) = &out.expr else { panic!("{}", pretty(&out.expr)) };
    let Expr::Sum { body, .. } = &**s else { panic!() };
    assert!(matches!(&**body, Expr::Record(fs) if fs.len() == 3), "{}", pretty(&out.expr));
    let v0 = crate::interp::eval(&env, &parse(src).unwrap()).unwrap();
    let v1 = crate::interp::eval(&env, &out.expr).unwrap();
    assert_eq!(v0, v1);
}

#[test]
fn different_sources_stay_apart() {
    let tenv = TypeEnv::new().with("R", parse_type("{int -> int}").unwrap()).with("S", parse_type("{int -> int}").unwrap());
    let src = parse("let a = sum(r in R) r.val in let b = sum(r in S) r.val in a + b").unwrap();
    let (elab, _) = typecheck(&tenv, &src).unwrap();
    assert_eq!(fuse_horizontal(&tenv, &src), elab);
}

fn nested() -> Environment {
    env(&[
        (
            "NR",
            "{ <A = 2.0, B = 1, C = { <D = 3.0> -> 1, <D = 0.5> -> 2 }> -> 2, <A = 1.0, B = 2, C = { <D = 4.0> -> 1 }> -> 1 }",
            "{ <A: real, B: int, C: { <D: real> -> int }> -> int }",
        ),
        ("S", "{ 1 -> 10.0, 2 -> 0.5 }", "{ int -> real }"),
    ])
}

#[test]
fn factorize_nested_product() {
    let (before, after) = check(
        &nested(),
        "sum(x in NR) sum(y in x.key.C) x.key.A * x.val * y.key.D * y.val",
        "sum(x in NR) x.key.A * x.val * sum(y in x.key.C) y.key.D * y.val",
    );
    assert_eq!(before, after);
}

#[test]
fn factorize_group_by() {
    check(
        &nested(),
        "sum(x in NR) sum(y in x.key.C) { x.key.B -> x.key.A * x.val * y.key.D * y.val }",
        "sum(x in NR) { x.key.B -> x.key.A * x.val * sum(y in x.key.C) y.key.D * y.val }",
    );
}

#[test]
fn factor_depending_on_both_stays() {
    let tenv = nested().type_env();
    let src = parse("sum(x in NR) sum(y in x.key.C) (y.key.D * x.key.A) * (x.val + y.val)").unwrap();
    let (elab, _) = typecheck(&tenv, &src).unwrap();
    assert_eq!(factorize(&tenv, &src), elab);
}

#[test]
fn hoisting_then_factorizing() {
    let env = nested();
    let tenv = env.type_env();
    let src = "sum(x in NR) sum(y in x.key.C) let E = S(x.key.B) in x.key.A*x.val*E*y.key.D*y.val";
    assert_form(
        &tenv,
        &hoist_invariant(&tenv, &parse(src).unwrap()),
        "sum(x in NR) let E = S(x.key.B) in sum(y in x.key.C) x.key.A*x.val*E*y.key.D*y.val",
    );
    check(&env, src, "sum(x in NR) let E = S(x.key.B) in x.key.A*x.val*E* sum(y in x.key.C) y.key.D*y.val");
}

#[test]
fn binding_reading_the_loop_variable_stays() {
    let tenv = nested().type_env();
    let src = parse("sum(x in NR) let E = x.val in E * 2").unwrap();
    let (elab, _) = typecheck(&tenv, &src).unwrap();
    assert_eq!(hoist_invariant(&tenv, &src), elab);
}

#[test]
fn covariance_fuses() {
    let env = env(&[(
        "A",
        "{ 0 -> { 0 -> 1.0, 2 -> 2.0 }, 1 -> { 1 -> 3.0 }, 2 -> { 0 -> 0.5, 1 -> 1.0, 2 -> 4.0 } }",
        "{ int -> { int -> real } }",
    )]);
    let (before, after) = check(
        &env,
        "let At = sum(row in A) sum(x in row.val) { x.key -> {row.key -> x.val } }
         sum(row in At) { row.key ->
           sum(x in row.val) sum(y in A(x.key))
             { y.key -> x.val * y.val } }",
        "sum(row in A)
           sum(x in row.val) { x.key ->
             sum(y in row.val) { y.key ->
               x.val * y.val } }",
    );
    assert!(after < before, "{after} !< {before}");
}

#[test]
fn let_used_twice_is_left_alone() {
    let tenv = relation().type_env();
    let src = parse("let y = sum(x in R) { x.key -> x.val } in sum(z in y) { z.key -> z.val * y(z.key) }").unwrap();
    let (elab, _) = typecheck(&tenv, &src).unwrap();
    assert_eq!(fuse_vertical(&tenv, &src), elab);
}

#[test]
fn nonlinear_consumer_is_left_alone() {
    let tenv = relation().type_env();
    let src = parse("let y = sum(x in R) { x.key * 0 -> x.val } in sum(z in y) { z.key -> z.val * z.val }").unwrap();
    let (elab, _) = typecheck(&tenv, &src).unwrap();
    assert_eq!(fuse_vertical(&tenv, &src), elab);
}

#[test]
fn conditionals_become_products() {
    let tenv = TypeEnv::new().with("p", Type::BOOL).with("k", Type::INT).with("v", Type::INT);
    assert_form(&tenv, &if_to_mul(&tenv, &parse("if (p) then { k -> v } else { }").unwrap()), "{ k -> promote_{bool,int}(p) * v }");
    assert_form(&tenv, &if_to_mul(&tenv, &parse("if (p) then 3.0 else 0.0").unwrap()), "promote_{bool,real}(p) * 3.0");
    let (elab, _) = typecheck(&tenv, &parse("if (p) then 3 else 4").unwrap()).unwrap();
    assert_eq!(if_to_mul(&tenv, &parse("if (p) then 3 else 4").unwrap()), elab);
    for p in [true, false] {
        let env = Environment::new().with("p", crate::Value::Bool(p), Type::BOOL);
        let a = crate::interp::eval(&env, &parse("if (p) then 3.0 else 0.0").unwrap()).unwrap();
        let b = crate::interp::eval(&env, &parse("promote_{bool,real}(p) * 3.0").unwrap()).unwrap();
        assert_eq!(a, b);
    }
    let m = if_to_mul(&tenv, &parse("if (p) then 3 else 0").unwrap());
    assert_eq!(mul_to_if(&m).unwrap(), parse("if (p) then 3").unwrap());
}

#[test]
fn optimal_terms_converge_in_one_pass() {
    let tenv = relation().type_env();
    let out = optimize(&tenv, &parse("sum(r in R) { r.key -> r.val * 2 }").unwrap(), &RewriteConfig::default()).unwrap();
    assert!(out.converged);
    assert_eq!(out.passes, 1);
    assert!(out.events.is_empty());
}

#[test]
fn pass_limit_is_a_warning() {
    let env = nested();
    let src = parse("sum(x in NR) sum(y in x.key.C) { x.key.B -> x.key.A * x.val * y.key.D * y.val }").unwrap();
    let cfg = RewriteConfig { max_passes: 1, ..RewriteConfig::default() };
    let out = optimize(&env.type_env(), &src, &cfg).unwrap();
    assert!(!out.converged);
    assert!(out.warning().is_some());
}

#[test]
fn rule_lists() {
    let cfg = RewriteConfig::parse_list("licm, vertical-key").unwrap();
    assert_eq!(cfg.rules, [Rule::Licm, Rule::VerticalKey]);
    assert!(RewriteConfig::parse_list("fusion").is_err());
    assert!(RewriteConfig::parse_list("none").unwrap().rules.is_empty());
}
