//! Small-step reduction on closed terms.
//!
//! Evaluation contexts go left to right: a sub-term is reducible only once
//! every sub-term before it (in evaluation order) is a value. Sums unroll
//! from the smallest key. A dictionary literal whose entries are all values
//! but which is not in canonical form (unsorted, duplicate keys, zero
//! values) steps to its canonical form in one `dict-normalize` step.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use super::eval::{compare, concat_records, divide, range_set, EvalError};
use crate::semiring::{self, promote_value, unwrap_leaves, wrap_leaves};
use crate::syntax::{expr_of_value, is_value, subst, value_of_expr, zero_expr, Expr};
use crate::typecheck::{type_of, typecheck, TypeEnv};
use crate::types::{tensor_type, Layout, Type};
use crate::value::{canonicalize, Dict, Value};

/// Reduction budget used by the test suites.
pub const STEP_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct StepError {
    pub code: &'static str,
    pub msg: String,
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.msg)
    }
}

impl StepError {
    fn stuck(e: &Expr) -> StepError {
        StepError { code: "progress-violation", msg: format!("no rule applies to `{e}`") }
    }

    fn runtime(e: impl fmt::Display) -> StepError {
        StepError { code: "runtime-error", msg: e.to_string() }
    }
}

impl From<EvalError> for StepError {
    fn from(e: EvalError) -> Self {
        StepError { code: e.code(), msg: e.to_string() }
    }
}

pub enum StepOutcome {
    Value,
    Stepped(Expr, &'static str),
}

/// Sub-terms that are evaluated, as indices into `Expr::children`.
fn evaluated_children(e: &Expr) -> core::ops::Range<usize> {
    match e {
        Expr::Sum { tag: Some(_), .. } => 0..0,
        Expr::Sum { .. } | Expr::Let(..) | Expr::If(..) => 0..1,
        Expr::Lit(_) | Expr::Var(_) | Expr::EmptyDict(_) => 0..0,
        _ => 0..e.children().len(),
    }
}

/// Positions of `e` that an evaluation context may focus on: evaluated
/// children up to and including the first one that is not a value.
fn context_positions(e: &Expr) -> Vec<usize> {
    let kids = e.children();
    let mut out = Vec::new();
    for i in evaluated_children(e) {
        out.push(i);
        if !is_value(kids[i]) {
            break;
        }
    }
    out
}

fn replace_child(e: Expr, idx: usize, new: Expr) -> Expr {
    let mut i = 0;
    let mut slot = Some(new);
    e.map_children(&mut |c| {
        let r = if i == idx { slot.take().expect("replaced once") } else { c };
        i += 1;
        r
    })
}

fn is_lit(e: &Expr) -> bool {
    matches!(e, Expr::Lit(_))
}

fn is_empty(e: &Expr) -> bool {
    matches!(e, Expr::EmptyDict(Some(_)))
}

fn is_dict_lit(e: &Expr) -> bool {
    matches!(e, Expr::DictLit { .. })
}

fn is_record(e: &Expr) -> bool {
    matches!(e, Expr::Record(_))
}

/// Names of the reduction rules whose left-hand side matches `e` at the
/// root. Each rule is tested on its own, so a well-formed term matching two
/// rules shows up as a determinism failure rather than being resolved by
/// the order of a match.
pub fn matching_rules(e: &Expr) -> Vec<&'static str> {
    let mut out = Vec::new();
    let mut rule = |cond: bool, name: &'static str| {
        if cond {
            out.push(name)
        }
    };
    match e {
        Expr::Sum { src, tag, .. } => {
            rule(tag.is_some(), "sum-tagged");
            let v = tag.is_none() && is_value(src);
            rule(v && is_empty(src), "sum-empty");
            rule(v && matches!(&**src, Expr::DictLit { layout: Layout::Hash, .. }), "sum-unroll");
            rule(v && matches!(&**src, Expr::DictLit { layout: Layout::Dense, .. }), "sum-dense");
        }
        Expr::Lookup(d, k) => {
            let v = is_value(d) && is_value(k);
            let hit = v && lookup_entry(d, k).is_some();
            rule(hit, "lookup-hit");
            rule(v && !hit, "lookup-miss");
        }
        Expr::DictLit { entries, .. } => {
            let all = entries.iter().all(|(k, v)| is_value(k) && is_value(v));
            rule(all && !is_value(e), "dict-normalize");
        }
        Expr::Field(x, _) => rule(is_value(x) && is_record(x), "field"),
        Expr::Let(_, e1, _) => rule(is_value(e1), "let"),
        Expr::If(c, _, _) => {
            rule(**c == Expr::Lit(Value::Bool(true)), "if-true");
            rule(**c == Expr::Lit(Value::Bool(false)), "if-false");
        }
        Expr::Add(a, b) => {
            let v = is_value(a) && is_value(b);
            rule(v && is_lit(a) && is_lit(b), "add-scalar");
            rule(v && is_record(a) && is_record(b), "add-record");
            rule(v && is_dict_lit(a) && is_dict_lit(b), "add-dict");
            rule(v && is_empty(a), "add-empty-left");
            rule(v && is_dict_lit(a) && is_empty(b), "add-empty-right");
        }
        Expr::Mul(a, b) => {
            let v = is_value(a) && is_value(b);
            rule(v && is_lit(a) && is_lit(b), "mul-scalar");
            rule(v && is_empty(a), "mul-empty-left");
            rule(v && is_dict_lit(a), "mul-dict-left");
            rule(v && is_record(a), "mul-record-left");
            rule(v && is_lit(a) && is_empty(b), "mul-scalar-empty");
            rule(v && is_lit(a) && is_dict_lit(b), "mul-scalar-dict");
            rule(v && is_lit(a) && is_record(b), "mul-scalar-record");
        }
        Expr::Promote(_, _, x) => rule(is_value(x), "promote"),
        Expr::Cmp(_, a, b) => rule(is_value(a) && is_value(b), "cmp"),
        Expr::Not(x) => rule(is_value(x), "not"),
        Expr::Concat(a, b) => rule(is_value(a) && is_value(b), "concat"),
        Expr::Div(a, b) => rule(is_value(a) && is_value(b), "div"),
        Expr::Wrap(_, x) => rule(is_value(x), "wrap"),
        Expr::Unwrap(_, x) => rule(is_value(x), "unwrap"),
        Expr::Range(x) => rule(is_value(x), "range"),
        Expr::Lit(_) | Expr::Var(_) | Expr::EmptyDict(_) | Expr::Record(_) => {}
    }
    out
}

/// Every (context, rule) decomposition of `e`, as rule names.
pub fn redexes(e: &Expr) -> Vec<&'static str> {
    let mut out = Vec::new();
    collect_redexes(e, &mut out);
    out
}

fn collect_redexes(e: &Expr, out: &mut Vec<&'static str>) {
    out.extend(matching_rules(e));
    let kids = e.children();
    for i in context_positions(e) {
        collect_redexes(kids[i], out);
    }
}

fn lookup_entry<'a>(d: &'a Expr, k: &Expr) -> Option<&'a Expr> {
    let Expr::DictLit { entries, .. } = d else {
        return None;
    };
    let kv = value_of_expr(k)?;
    entries
        .iter()
        .find(|(k2, _)| value_of_expr(k2).is_some_and(|x| canonicalize(&x) == canonicalize(&kv)))
        .map(|(_, v)| v)
}

fn closed_type(e: &Expr) -> Result<Type, StepError> {
    type_of(&TypeEnv::new(), e).map_err(|err| StepError { code: "type-error", msg: err.to_string() })
}

fn lit_of(v: Value) -> Expr {
    Expr::Lit(v)
}

fn as_value(e: &Expr) -> Value {
    value_of_expr(e).expect("operand in value form")
}

/// One reduction step at the unique redex, or `Value` if `e` is a value.
pub fn step(e: &Expr) -> Result<StepOutcome, StepError> {
    if is_value(e) {
        return Ok(StepOutcome::Value);
    }
    let kids = e.children();
    for i in context_positions(e) {
        if !is_value(kids[i]) {
            return match step(kids[i])? {
                StepOutcome::Stepped(c, rule) => Ok(StepOutcome::Stepped(replace_child(e.clone(), i, c), rule)),
                StepOutcome::Value => unreachable!("checked not a value"),
            };
        }
    }
    let rules = matching_rules(e);
    match rules.as_slice() {
        [rule] => Ok(StepOutcome::Stepped(apply(e, rule)?, rule)),
        [] => Err(StepError::stuck(e)),
        many => Err(StepError {
            code: "determinism-violation",
            msg: format!("rules {many:?} all apply to `{e}`"),
        }),
    }
}

fn apply(e: &Expr, rule: &str) -> Result<Expr, StepError> {
    Ok(match (rule, e) {
        ("sum-tagged", Expr::Sum { var, src, body, tag: Some(k) }) => {
            let s = crate::types::ScalarType::Tagged(*k);
            Expr::Unwrap(
                s,
                Box::new(Expr::Sum {
                    var: var.clone(),
                    src: src.clone(),
                    body: Box::new(Expr::Wrap(s, body.clone())),
                    tag: None,
                }),
            )
        }
        ("sum-empty", Expr::Sum { var, src, body, .. }) => {
            let Expr::EmptyDict(Some(Type::Dict { key, val, .. })) = &**src else {
                return Err(StepError::stuck(e));
            };
            let xt = Type::record([("key", (**key).clone()), ("val", (**val).clone())]);
            let bt = type_of(&TypeEnv::new().with(var.clone(), xt), body)
                .map_err(|err| StepError { code: "type-error", msg: err.to_string() })?;
            zero_expr(&bt).ok_or_else(|| StepError::runtime("sum body has no zero"))?
        }
        ("sum-unroll", Expr::Sum { var, src, body, .. }) => {
            let Expr::DictLit { entries, layout } = &**src else {
                return Err(StepError::stuck(e));
            };
            let (k0, v0) = &entries[0];
            let x = crate::syntax::record([("key", k0.clone()), ("val", v0.clone())]);
            let rest = if entries.len() == 1 {
                Expr::EmptyDict(Some(closed_type(src)?))
            } else {
                Expr::DictLit { entries: entries[1..].to_vec(), layout: *layout }
            };
            Expr::Add(
                Box::new(subst((**body).clone(), var, &x)),
                Box::new(Expr::Sum { var: var.clone(), src: Box::new(rest), body: body.clone(), tag: None }),
            )
        }
        ("sum-dense", Expr::Sum { var, src, body, .. }) => {
            let Expr::DictLit { entries, .. } = &**src else {
                return Err(StepError::stuck(e));
            };
            let mut terms: Vec<Expr> = entries
                .iter()
                .map(|(k, v)| {
                    let x = crate::syntax::record([("key", k.clone()), ("val", v.clone())]);
                    subst((**body).clone(), var, &x)
                })
                .collect();
            let mut acc = terms.pop().expect("non-empty dense literal");
            while let Some(t) = terms.pop() {
                acc = Expr::Add(Box::new(t), Box::new(acc));
            }
            acc
        }
        ("lookup-hit", Expr::Lookup(d, k)) => lookup_entry(d, k).expect("matched").clone(),
        ("lookup-miss", Expr::Lookup(d, _)) => match closed_type(d)? {
            Type::Dict { val, .. } => zero_expr(&val).ok_or_else(|| StepError::runtime("lookup value has no zero"))?,
            _ => return Err(StepError::stuck(e)),
        },
        ("dict-normalize", Expr::DictLit { entries, .. }) => {
            let t = closed_type(e)?;
            let mut m = BTreeMap::new();
            for (k, v) in entries {
                let k = canonicalize(&as_value(k));
                semiring::insert_add(&mut m, k, canonicalize(&as_value(v))).map_err(StepError::runtime)?;
            }
            expr_of_value(&Value::Dict(Arc::new(Dict::Hash(m))), &t)
        }
        ("field", Expr::Field(x, n)) => match &**x {
            Expr::Record(fs) => fs.iter().find(|(m, _)| m == n).map(|(_, v)| v.clone()).ok_or_else(|| StepError::stuck(e))?,
            _ => return Err(StepError::stuck(e)),
        },
        ("let", Expr::Let(x, e1, e2)) => subst((**e2).clone(), x, e1),
        ("if-true", Expr::If(_, t, _)) => (**t).clone(),
        ("if-false", Expr::If(_, _, el)) => match el {
            Some(el) => (**el).clone(),
            None => return Err(StepError::runtime("if without else must be elaborated first")),
        },
        ("add-scalar", Expr::Add(a, b)) => {
            lit_of(semiring::add(&as_value(a), &as_value(b)).map_err(StepError::runtime)?)
        }
        ("add-record", Expr::Add(a, b)) => {
            let (Expr::Record(fa), Expr::Record(fb)) = (&**a, &**b) else {
                return Err(StepError::stuck(e));
            };
            Expr::Record(
                fa.iter()
                    .zip(fb.iter())
                    .map(|((n, x), (_, y))| (n.clone(), Expr::Add(Box::new(x.clone()), Box::new(y.clone()))))
                    .collect(),
            )
        }
        ("add-dict", Expr::Add(a, b)) => add_dict_literals(a, b)?,
        ("add-empty-left", Expr::Add(_, b)) => (**b).clone(),
        ("add-empty-right", Expr::Add(a, _)) => (**a).clone(),
        ("mul-scalar", Expr::Mul(a, b)) => {
            lit_of(semiring::mul(&as_value(a), &as_value(b)).map_err(StepError::runtime)?)
        }
        ("mul-empty-left", Expr::Mul(a, b)) => {
            let ta = closed_type(a)?;
            let tb = closed_type(b)?;
            Expr::EmptyDict(Some(tensor_type(&ta, &tb).ok_or_else(|| StepError::stuck(e))?))
        }
        ("mul-dict-left", Expr::Mul(a, b)) => map_entries(a, |v| Expr::Mul(Box::new(v.clone()), b.clone())),
        ("mul-record-left", Expr::Mul(a, b)) => map_fields(a, |v| Expr::Mul(Box::new(v.clone()), b.clone())),
        ("mul-scalar-empty", Expr::Mul(a, b)) => {
            let ta = closed_type(a)?;
            let tb = closed_type(b)?;
            Expr::EmptyDict(Some(tensor_type(&ta, &tb).ok_or_else(|| StepError::stuck(e))?))
        }
        ("mul-scalar-dict", Expr::Mul(a, b)) => map_entries(b, |v| Expr::Mul(a.clone(), Box::new(v.clone()))),
        ("mul-scalar-record", Expr::Mul(a, b)) => map_fields(b, |v| Expr::Mul(a.clone(), Box::new(v.clone()))),
        ("promote", Expr::Promote(_, t, x)) => lit_of(promote_value(&as_value(x), *t).map_err(StepError::runtime)?),
        ("cmp", Expr::Cmp(op, a, b)) => lit_of(Value::Bool(compare(*op, &as_value(a), &as_value(b)))),
        ("not", Expr::Not(x)) => lit_of(Value::Bool(!as_value(x).as_bool().ok_or_else(|| StepError::stuck(e))?)),
        ("concat", Expr::Concat(a, b)) => {
            let t = closed_type(e)?;
            expr_of_value(&concat_records(&as_value(a), &as_value(b)), &t)
        }
        ("div", Expr::Div(a, b)) => {
            let x = as_value(a).as_real().ok_or_else(|| StepError::stuck(e))?;
            let y = as_value(b).as_real().ok_or_else(|| StepError::stuck(e))?;
            lit_of(divide(x, y)?)
        }
        ("wrap", Expr::Wrap(t, x)) => {
            let ty = closed_type(e)?;
            expr_of_value(&wrap_leaves(&as_value(x), *t).map_err(StepError::runtime)?, &ty)
        }
        ("unwrap", Expr::Unwrap(_, x)) => {
            let ty = closed_type(e)?;
            expr_of_value(&unwrap_leaves(&as_value(x)).map_err(StepError::runtime)?, &ty)
        }
        ("range", Expr::Range(x)) => {
            let n = as_value(x).as_int().ok_or_else(|| StepError::stuck(e))?;
            expr_of_value(&range_set(n), &Type::set(Type::INT))
        }
        _ => return Err(StepError::stuck(e)),
    })
}

fn map_entries(d: &Expr, f: impl Fn(&Expr) -> Expr) -> Expr {
    match d {
        Expr::DictLit { entries, layout } => Expr::DictLit {
            entries: entries.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
            layout: *layout,
        },
        other => other.clone(),
    }
}

fn map_fields(r: &Expr, f: impl Fn(&Expr) -> Expr) -> Expr {
    match r {
        Expr::Record(fs) => Expr::Record(fs.iter().map(|(n, v)| (n.clone(), f(v))).collect()),
        other => other.clone(),
    }
}

/// Point-wise sum of two dictionary literals in value form: shared keys get
/// an `Add` node, the others are copied.
fn add_dict_literals(a: &Expr, b: &Expr) -> Result<Expr, StepError> {
    let (
        Expr::DictLit { entries: ea, layout: la },
        Expr::DictLit { entries: eb, layout: lb },
    ) = (a, b)
    else {
        return Err(StepError::stuck(a));
    };
    if la != lb {
        return Err(StepError::runtime("adding dictionaries of different layouts"));
    }
    let plus = |x: &Expr, y: &Expr| Expr::Add(Box::new(x.clone()), Box::new(y.clone()));
    let entries = match la {
        Layout::Dense => {
            let n = ea.len().max(eb.len());
            (0..n)
                .map(|i| match (ea.get(i), eb.get(i)) {
                    (Some((k, x)), Some((_, y))) => (k.clone(), plus(x, y)),
                    (Some(p), None) | (None, Some(p)) => p.clone(),
                    (None, None) => unreachable!(),
                })
                .collect()
        }
        Layout::Hash => {
            let key = |k: &Expr| as_value(k);
            let mut out = Vec::with_capacity(ea.len() + eb.len());
            let (mut i, mut j) = (0, 0);
            while i < ea.len() || j < eb.len() {
                let ord = match (ea.get(i), eb.get(j)) {
                    (Some((ka, _)), Some((kb, _))) => key(ka).cmp(&key(kb)),
                    (Some(_), None) => core::cmp::Ordering::Less,
                    _ => core::cmp::Ordering::Greater,
                };
                match ord {
                    core::cmp::Ordering::Less => {
                        out.push(ea[i].clone());
                        i += 1;
                    }
                    core::cmp::Ordering::Greater => {
                        out.push(eb[j].clone());
                        j += 1;
                    }
                    core::cmp::Ordering::Equal => {
                        out.push((ea[i].0.clone(), plus(&ea[i].1, &eb[j].1)));
                        i += 1;
                        j += 1;
                    }
                }
            }
            out
        }
    };
    Ok(Expr::DictLit { entries, layout: *la })
}

/// Reduce to a value within `budget` steps, reporting each intermediate
/// term to `trace`. Returns the value term and the number of steps.
pub fn run(
    e: &Expr,
    budget: usize,
    mut trace: Option<&mut dyn FnMut(&Expr, &'static str)>,
) -> Result<(Expr, usize), StepError> {
    let mut cur = e.clone();
    for n in 0..=budget {
        match step(&cur)? {
            StepOutcome::Value => return Ok((cur, n)),
            StepOutcome::Stepped(next, rule) => {
                if let Some(t) = trace.as_deref_mut() {
                    t(&next, rule);
                }
                cur = next;
            }
        }
    }
    Err(StepError { code: "step-budget-exceeded", msg: format!("no value after {budget} steps") })
}

/// Elaborate a closed term and reduce it to a value.
pub fn eval_small_step(e: &Expr) -> Result<Value, StepError> {
    let (elab, _) = typecheck(&TypeEnv::new(), e).map_err(|err| StepError { code: err.code, msg: err.to_string() })?;
    let (v, _) = run(&elab, STEP_BUDGET, None)?;
    Ok(value_of_expr(&v).expect("run ends in a value"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;
    use crate::value::dump_value;

    fn elab(s: &str) -> Expr {
        typecheck(&TypeEnv::new(), &parse(s).unwrap()).unwrap().0
    }

    fn one_step(s: &str) -> (String, &'static str) {
        match step(&elab(s)).unwrap() {
            StepOutcome::Stepped(e, r) => (crate::pretty::pretty(&e), r),
            StepOutcome::Value => panic!("{s} is a value"),
        }
    }

    #[test]
    fn empty_sum_steps_to_zero() {
        assert_eq!(one_step("sum(x in { }_{int,int}) x.val"), ("0".to_string(), "sum-empty"));
    }

    #[test]
    fn let_substitutes() {
        assert_eq!(one_step("let x = 3 in x + x"), ("3 + 3".to_string(), "let"));
    }

    #[test]
    fn absent_key_lookup() {
        assert_eq!(one_step("{1 -> 2}(5)"), ("0".to_string(), "lookup-miss"));
    }

    #[test]
    fn sum_unrolls_smallest_key_first() {
        let (s, r) = one_step("sum(x in {2 -> 20, 1 -> 10}) x.val");
        // the literal is first normalized into key order
        assert_eq!(r, "dict-normalize");
        assert_eq!(s, "sum(x in { 1 -> 10, 2 -> 20 }) x.val");
        let (s, r) = one_step(&s);
        assert_eq!(r, "sum-unroll");
        assert_eq!(s, "<key = 1, val = 10>.val + (sum(x in { 2 -> 20 }) x.val)");
    }

    #[test]
    fn values_do_not_step() {
        assert!(matches!(step(&elab("{ 1 -> <a = 2.0> }")).unwrap(), StepOutcome::Value));
        assert!(redexes(&elab("{ 1 -> <a = 2.0> }")).is_empty());
    }

    #[test]
    fn full_runs_match_expected_values() {
        for (src, want) in [
            (r#"{ "a" -> 2, "b" -> 3 } * { "a" -> 4, "c" -> 5 }"#, r#"{ "a" -> { "a" -> 8, "c" -> 10 }, "b" -> { "a" -> 12, "c" -> 15 } }"#),
            (r#"{ "a" -> 2, "b" -> 3 } * <c = 4.0>"#, r#"{ "a" -> <c=8.0>, "b" -> <c=12.0> }"#),
            ("(sum(x in {1 -> 2, 3 -> 4}) { x.key -> x.val }) + {1 -> -2}", "{ 3 -> 4 }"),
            ("sum<min_sum>(x in {1 -> 5.0, 2 -> 2.0}) x.val", "2.0"),
            ("sum(x in [| 1, 0, 3 |]) x.val * 2", "8"),
            ("if (1 < 2) then [| 1 |] + [| 0, 2 |]", "[| 1, 2 |]"),
            ("range(2) * 3", "{ 0 -> 3, 1 -> 3 }"),
        ] {
            let v = eval_small_step(&parse(src).unwrap()).unwrap();
            assert_eq!(dump_value(&v), want, "{src}");
        }
    }

    #[test]
    fn exactly_one_redex_until_value() {
        let mut e = elab("let d = {1 -> 2, 2 -> 3} in sum(x in d) { x.key -> x.val * d(x.key) } * 2");
        loop {
            let r = redexes(&e);
            match step(&e).unwrap() {
                StepOutcome::Value => {
                    assert!(r.is_empty());
                    break;
                }
                StepOutcome::Stepped(next, rule) => {
                    assert_eq!(r, [rule]);
                    e = next;
                }
            }
        }
        assert_eq!(crate::pretty::pretty(&e), "{ 1 -> 8, 2 -> 18 }");
    }

    #[test]
    fn budget_is_enforced() {
        let e = elab("sum(x in range(50)) x.key");
        assert_eq!(run(&e, 10, None).unwrap_err().code, "step-budget-exceeded");
    }
}
