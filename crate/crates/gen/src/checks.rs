//! Property checkers shared by the proptest suites and the acceptance
//! harness. Each returns `Err` with a readable counterexample.

use rand::Rng;
use sdql_core::interp::{eval, redexes, step, Environment, StepOutcome, STEP_BUDGET};
use sdql_core::opt::{optimize, RewriteConfig, Rule};
use sdql_core::parse::parse;
use sdql_core::pretty::pretty;
use sdql_core::semiring::{add, mul, one_of, zero_of};
use sdql_core::syntax::{alpha_eq, value_of_expr, Expr};
use sdql_core::typecheck::{type_of, typecheck, value_has_type, TypeEnv};
use sdql_core::types::tensor_type;
use sdql_core::value::{canonicalize, values_equal};
use sdql_core::{ScalarType, Type, Value};

use crate::values::{scalar_kinds, semiring_type, value_of_type};

pub type Check = Result<(), String>;

/// Values for one round of the law suite: `x`, `y`, `z` share a type; `a`
/// and `c` are independent left and right factors. All leaves are `leaf`.
#[derive(Debug, Clone)]
pub struct LawInstance {
    pub leaf: ScalarType,
    pub a: (Value, Type),
    pub x: Value,
    pub y: Value,
    pub z: Value,
    pub xt: Type,
    pub c: (Value, Type),
}

impl LawInstance {
    /// Leaf kinds cycle with `round` so every kind is covered evenly.
    pub fn generate(rng: &mut impl Rng, round: usize) -> LawInstance {
        let kinds = scalar_kinds();
        let leaf = kinds[round % kinds.len()];
        let at = semiring_type(rng, leaf, 2);
        let xt = semiring_type(rng, leaf, 2);
        let ct = semiring_type(rng, leaf, 2);
        LawInstance {
            leaf,
            a: (value_of_type(rng, &at), at),
            x: value_of_type(rng, &xt),
            y: value_of_type(rng, &xt),
            z: value_of_type(rng, &xt),
            xt,
            c: (value_of_type(rng, &ct), ct),
        }
    }
}

fn same(law: &str, l: &Value, r: &Value) -> Check {
    if !values_equal(l, r) {
        return Err(format!("{law}: {l} != {r}"));
    }
    for v in [l, r] {
        if canonicalize(v) != *v {
            return Err(format!("{law}: result {v} is not canonical"));
        }
    }
    Ok(())
}

fn op(r: Result<Value, sdql_core::ValueError>) -> Result<Value, String> {
    r.map_err(|e| e.to_string())
}

/// Addition is an associative, commutative monoid with zero; multiplication
/// is associative, distributes over addition on both sides, has the scalar
/// one as identity and is annihilated by zero. Scalar multiplication also
/// commutes.
pub fn semiring_laws(inst: &LawInstance) -> Check {
    let LawInstance { a: (a, at), x, y, z, xt, c: (c, ct), leaf } = inst;
    let plus = |p: &Value, q: &Value| op(add(p, q));
    let times = |p: &Value, q: &Value| op(mul(p, q));

    same("add-assoc", &plus(&plus(x, y)?, z)?, &plus(x, &plus(y, z)?)?)?;
    same("add-comm", &plus(x, y)?, &plus(y, x)?)?;
    let zx = op(zero_of(xt))?;
    same("add-zero-left", &plus(&zx, x)?, x)?;
    same("add-zero-right", &plus(x, &zx)?, x)?;

    same("mul-assoc", &times(&times(a, x)?, c)?, &times(a, &times(x, c)?)?)?;
    same("left-distrib", &times(a, &plus(x, y)?)?, &plus(&times(a, x)?, &times(a, y)?)?)?;
    same("right-distrib", &times(&plus(x, y)?, c)?, &plus(&times(x, c)?, &times(y, c)?)?)?;

    let one = one_of(*leaf).ok_or("no one")?;
    same("mul-one-left", &times(&one, x)?, x)?;
    same("mul-one-right", &times(x, &one)?, x)?;

    let ax = tensor_type(at, xt).ok_or_else(|| format!("no tensor of {at} and {xt}"))?;
    let xc = tensor_type(xt, ct).ok_or_else(|| format!("no tensor of {xt} and {ct}"))?;
    same("annihilate-left", &times(&op(zero_of(at))?, x)?, &op(zero_of(&ax))?)?;
    same("annihilate-right", &times(x, &op(zero_of(ct))?)?, &op(zero_of(&xc))?)?;
    let ax_v = times(a, x)?;
    if !value_has_type(&ax_v, &ax) {
        return Err(format!("product {ax_v} does not have type {ax}"));
    }

    if let (Type::Scalar(_), Type::Scalar(_)) = (at, xt) {
        same("mul-comm", &times(a, x)?, &times(x, a)?)?;
    }
    Ok(())
}

/// Outcome of running a closed term through both interpreters.
#[derive(Debug, Clone, Default)]
pub struct SemanticsStats {
    pub steps: usize,
}

/// Small steps preserve the type and are deterministic, evaluation
/// terminates within the step budget, and big-step evaluation agrees with
/// the small-step normal form.
pub fn semantics(e: &Expr, expected: &Type) -> Result<SemanticsStats, String> {
    let te = TypeEnv::new();
    let (elab, t) = typecheck(&te, e).map_err(|err| format!("`{e}` does not typecheck: {err}"))?;
    if t != *expected {
        return Err(format!("`{e}` has type {t}, expected {expected}"));
    }
    let big = eval(&Environment::new(), e).map_err(|err| format!("eval `{e}`: {err}"))?;

    let mut cur = elab;
    for n in 0..=STEP_BUDGET {
        let rs = redexes(&cur);
        let outcome = step(&cur).map_err(|err| format!("step {n} of `{e}` at `{cur}`: {err}"))?;
        match outcome {
            StepOutcome::Value => {
                if !rs.is_empty() {
                    return Err(format!("value `{cur}` still matches {rs:?}"));
                }
                let small = value_of_expr(&cur).ok_or_else(|| format!("`{cur}` is not a value"))?;
                if !values_equal(&big, &small) {
                    return Err(format!("`{e}`: big-step {big} but small-step {small}"));
                }
                return Ok(SemanticsStats { steps: n });
            }
            StepOutcome::Stepped(next, rule) => {
                if rs.len() != 1 {
                    return Err(format!("`{cur}` has {} applicable rules: {rs:?}", rs.len()));
                }
                if rs[0] != rule {
                    return Err(format!("`{cur}` matched {} but stepped by {rule}", rs[0]));
                }
                let nt = type_of(&te, &next).map_err(|err| format!("after {rule}, `{next}` is ill-typed: {err}"))?;
                if nt != t {
                    return Err(format!("{rule} changed the type of `{cur}` from {t} to {nt}"));
                }
                cur = next;
            }
        }
    }
    Err(format!("`{e}` did not reach a value in {STEP_BUDGET} steps"))
}

/// Printing then parsing gives back the same term up to renaming.
pub fn round_trip(e: &Expr) -> Check {
    let text = pretty(e);
    let back = parse(&text).map_err(|err| format!("`{text}` does not parse: {err}"))?;
    if !alpha_eq(&back, e) {
        return Err(format!("`{text}` parses as `{}`", pretty(&back)));
    }
    Ok(())
}

/// Typechecking twice gives the same type, and the elaborated term checks
/// to the same type again.
pub fn type_determinism(e: &Expr) -> Check {
    let te = TypeEnv::new();
    let (elab, t1) = typecheck(&te, e).map_err(|err| err.to_string())?;
    let t2 = type_of(&te, e).map_err(|err| err.to_string())?;
    let t3 = type_of(&te, &elab).map_err(|err| format!("elaborated `{elab}`: {err}"))?;
    if t1 != t2 || t1 != t3 {
        return Err(format!("`{e}` typed as {t1}, {t2}, {t3}"));
    }
    Ok(())
}

/// Optimizing with only `rule` enabled fires it at least once and keeps
/// the value and the type. Returns the number of firings.
pub fn rewrite_sound(rule: Rule, env: &Environment, e: &Expr) -> Result<usize, String> {
    let te = env.type_env();
    let t0 = type_of(&te, e).map_err(|err| format!("`{e}` does not typecheck: {err}"))?;
    let out = optimize(&te, e, &RewriteConfig::only(&[rule])).map_err(|err| err.to_string())?;
    let fired = out.events.iter().filter(|ev| ev.rule == rule.name()).count();
    if fired == 0 {
        return Err(format!("{rule} did not fire on `{e}`"));
    }
    preserves(env, e, &t0, &out.expr).map(|_| fired)
}

/// `after` has type `t0` and the same value as `before` under `env`.
pub fn preserves(env: &Environment, before: &Expr, t0: &Type, after: &Expr) -> Check {
    let t1 = type_of(&env.type_env(), after).map_err(|err| format!("rewritten `{after}` is ill-typed: {err}"))?;
    if t1 != *t0 {
        return Err(format!("`{before}` : {t0} rewrote to `{after}` : {t1}"));
    }
    let v0 = eval(env, before).map_err(|err| format!("`{before}`: {err}"))?;
    let v1 = eval(env, after).map_err(|err| format!("`{after}`: {err}"))?;
    if !values_equal(&v0, &v1) {
        return Err(format!("`{before}` = {v0} but `{after}` = {v1}"));
    }
    Ok(())
}
