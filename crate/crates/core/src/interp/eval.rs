use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::semiring::{self, add_assign, mul_counted, promote_value, unwrap_leaves, wrap_leaves, zero_of};
use crate::syntax::{CmpOp, Expr};
use crate::typecheck::{annotate, type_of_value, typecheck, TypeEnv, TypeError, TypeTable};
use crate::types::{ScalarType, Type};
use crate::value::{canonicalize, Dict, Value};
use crate::{Name, ValueError};

/// Counts of elementary operations performed by one evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalMetrics {
    /// Executions of a `sum` body.
    pub loop_iterations: u64,
    /// Scalar multiplications, including those inside dictionary products.
    pub scalar_mults: u64,
    /// Dictionaries built by literals, `range` and dictionary products.
    pub dict_allocations: u64,
    /// Dictionary lookups.
    pub lookups: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    Type(TypeError),
    Value(ValueError),
    Unbound(Name),
    DivisionByZero,
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::Type(e) => e.code,
            EvalError::Value(e) => e.code(),
            EvalError::Unbound(_) => "unbound-variable",
            EvalError::DivisionByZero => "division-by-zero",
        }
    }

    /// Whether the failure happened before evaluation started.
    pub fn is_type_error(&self) -> bool {
        matches!(self, EvalError::Type(_))
    }
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Type(e) => write!(f, "{e}"),
            EvalError::Value(e) => write!(f, "{e}"),
            EvalError::Unbound(x) => write!(f, "unbound-variable: `{x}`"),
            EvalError::DivisionByZero => f.write_str("division-by-zero"),
        }
    }
}

impl From<ValueError> for EvalError {
    fn from(e: ValueError) -> Self {
        EvalError::Value(e)
    }
}

impl From<TypeError> for EvalError {
    fn from(e: TypeError) -> Self {
        EvalError::Type(e)
    }
}

/// Free-variable bindings for evaluation, each with its type.
#[derive(Debug, Clone, Default)]
pub struct Environment {
    bindings: Vec<(Name, Value, Type)>,
}

impl Environment {
    pub fn new() -> Environment {
        Environment::default()
    }

    /// Bind `x` to `v : t`; the value is canonicalized.
    pub fn bind(&mut self, x: impl Into<Name>, v: Value, t: Type) {
        self.bindings.push((x.into(), canonicalize(&v), t));
    }

    pub fn with(mut self, x: impl Into<Name>, v: Value, t: Type) -> Environment {
        self.bind(x, v, t);
        self
    }

    /// Bind a value whose type can be read off it (no empty dictionaries).
    pub fn bind_value(&mut self, x: impl Into<Name>, v: Value) -> Result<(), String> {
        let x = x.into();
        let t = type_of_value(&v).ok_or_else(|| format!("cannot infer the type of `{x}`; give it explicitly"))?;
        self.bind(x, v, t);
        Ok(())
    }

    pub fn get(&self, x: &str) -> Option<(&Value, &Type)> {
        self.bindings.iter().rev().find(|(n, _, _)| &**n == x).map(|(_, v, t)| (v, t))
    }

    pub fn type_env(&self) -> TypeEnv {
        self.bindings.iter().map(|(n, _, t)| (n.clone(), t.clone())).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Value, &Type)> {
        self.bindings.iter().map(|(n, v, t)| (n, v, t))
    }
}

/// Type check and evaluate `e`.
pub fn eval(env: &Environment, e: &Expr) -> Result<Value, EvalError> {
    eval_with_metrics(env, e).map(|(v, _)| v)
}

pub fn eval_with_metrics(env: &Environment, e: &Expr) -> Result<(Value, EvalMetrics), EvalError> {
    let (elab, _) = typecheck(&env.type_env(), e)?;
    eval_elaborated(env, &elab)
}

/// Evaluate a term that is already elaborated.
pub fn eval_elaborated(env: &Environment, e: &Expr) -> Result<(Value, EvalMetrics), EvalError> {
    let (_, table) = annotate(&env.type_env(), e)?;
    let mut ev = Evaluator {
        table: &table,
        globals: env,
        locals: Vec::new(),
        metrics: EvalMetrics::default(),
    };
    let v = ev.eval(e)?;
    Ok((v, ev.metrics))
}

struct Evaluator<'a> {
    table: &'a TypeTable,
    globals: &'a Environment,
    locals: Vec<(Name, Value)>,
    metrics: EvalMetrics,
}

impl Evaluator<'_> {
    fn table_type(&self, e: &Expr) -> &Type {
        self.table.get(e).expect("annotated by the type checker")
    }

    fn var(&self, x: &Name) -> Result<Value, EvalError> {
        if let Some((_, v)) = self.locals.iter().rev().find(|(n, _)| n == x) {
            return Ok(v.clone());
        }
        self.globals.get(x).map(|(v, _)| v.clone()).ok_or_else(|| EvalError::Unbound(x.clone()))
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, EvalError> {
        Ok(match e {
            Expr::Lit(v) => v.clone(),
            Expr::Var(x) => self.var(x)?,
            Expr::Sum { var, src, body, tag } => {
                let d = self.eval(src)?;
                let bt = self.table_type(body).clone();
                let dict = match &d {
                    Value::Dict(d) => d.clone(),
                    other => return Err(ValueError::MulUndefined(other.to_string(), "sum".to_string()).into()),
                };
                match tag {
                    None => {
                        let mut acc = zero_of(&bt)?;
                        for (k, v) in dict.entries() {
                            let x = Value::record([("key", k), ("val", v.clone())]);
                            self.locals.push((var.clone(), x));
                            self.metrics.loop_iterations += 1;
                            let r = self.eval(body);
                            self.locals.pop();
                            add_assign(&mut acc, r?)?;
                        }
                        acc
                    }
                    Some(kind) => {
                        let s = ScalarType::Tagged(*kind);
                        let wt = bt.map_leaves(&|_| Some(s)).expect("total");
                        let mut acc = zero_of(&wt)?;
                        for (k, v) in dict.entries() {
                            let x = Value::record([("key", k), ("val", v.clone())]);
                            self.locals.push((var.clone(), x));
                            self.metrics.loop_iterations += 1;
                            let r = self.eval(body);
                            self.locals.pop();
                            add_assign(&mut acc, wrap_leaves(&r?, s)?)?;
                        }
                        unwrap_leaves(&acc)?
                    }
                }
            }
            Expr::DictLit { entries, layout } => {
                self.metrics.dict_allocations += 1;
                match layout {
                    crate::types::Layout::Hash => {
                        let mut m = BTreeMap::new();
                        for (k, v) in entries {
                            let k = self.eval(k)?;
                            let v = self.eval(v)?;
                            semiring::insert_add(&mut m, k, v)?;
                        }
                        Value::Dict(Arc::new(Dict::Hash(m)))
                    }
                    crate::types::Layout::Dense => {
                        let mut xs = Vec::with_capacity(entries.len());
                        for (k, v) in entries {
                            self.eval(k)?;
                            xs.push(self.eval(v)?);
                        }
                        Value::array(xs)
                    }
                }
            }
            Expr::EmptyDict(Some(t)) => zero_of(t)?,
            Expr::EmptyDict(None) => {
                unreachable!("elaboration annotates every empty dictionary")
            }
            Expr::Lookup(d, k) => {
                let dv = self.eval(d)?;
                let kv = self.eval(k)?;
                self.metrics.lookups += 1;
                let vt = match self.table_type(d) {
                    Type::Dict { val, .. } => (**val).clone(),
                    other => unreachable!("lookup target typed {other}"),
                };
                semiring::lookup(&dv, &kv, &vt)?
            }
            Expr::Record(fs) => {
                let mut out = Vec::with_capacity(fs.len());
                for (n, x) in fs {
                    out.push((n.clone(), self.eval(x)?));
                }
                Value::Record(Arc::new(out))
            }
            Expr::Field(x, n) => {
                let r = self.eval(x)?;
                r.field(n).cloned().expect("field checked by the type checker")
            }
            Expr::Let(x, e1, e2) => {
                let v = self.eval(e1)?;
                self.locals.push((x.clone(), v));
                let r = self.eval(e2);
                self.locals.pop();
                r?
            }
            Expr::If(c, t, el) => {
                if self.eval(c)?.as_bool().expect("bool condition") {
                    self.eval(t)?
                } else {
                    match el {
                        Some(el) => self.eval(el)?,
                        None => unreachable!("elaboration fills every else branch"),
                    }
                }
            }
            Expr::Add(a, b) => {
                let mut x = self.eval(a)?;
                let y = self.eval(b)?;
                add_assign(&mut x, y)?;
                x
            }
            Expr::Mul(a, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                let r = mul_counted(&x, &y, &mut self.metrics.scalar_mults)?;
                if matches!(r, Value::Dict(_)) {
                    self.metrics.dict_allocations += 1;
                }
                r
            }
            Expr::Promote(_, t, x) => promote_value(&self.eval(x)?, *t)?,
            Expr::Cmp(op, a, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                Value::Bool(compare(*op, &x, &y))
            }
            Expr::Not(x) => Value::Bool(!self.eval(x)?.as_bool().expect("bool operand")),
            Expr::Concat(a, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                concat_records(&x, &y)
            }
            Expr::Div(a, b) => {
                let x = self.eval(a)?.as_real().expect("real operand");
                let y = self.eval(b)?.as_real().expect("real operand");
                divide(x, y)?
            }
            Expr::Wrap(t, x) => wrap_leaves(&self.eval(x)?, *t)?,
            Expr::Unwrap(_, x) => unwrap_leaves(&self.eval(x)?)?,
            Expr::Range(x) => {
                let n = self.eval(x)?.as_int().expect("int bound");
                self.metrics.dict_allocations += 1;
                range_set(n)
            }
        })
    }
}

pub(crate) fn compare(op: CmpOp, x: &Value, y: &Value) -> bool {
    let (x, y) = (canonicalize(x), canonicalize(y));
    match op {
        CmpOp::Eq => x == y,
        CmpOp::Ne => x != y,
        CmpOp::Lt => x < y,
        CmpOp::Le => x <= y,
    }
}

pub(crate) fn concat_records(x: &Value, y: &Value) -> Value {
    let mut fs = x.as_record().expect("record operand").to_vec();
    fs.extend(y.as_record().expect("record operand").iter().cloned());
    Value::Record(Arc::new(fs))
}

pub(crate) fn divide(x: f64, y: f64) -> Result<Value, EvalError> {
    if y == 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    Ok(Value::Real(x / y))
}

pub(crate) fn range_set(n: i64) -> Value {
    Value::set((0..n.max(0)).map(Value::Int))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse, parse_type, parse_value};
    use crate::value::dump_value;

    fn run(env: &Environment, src: &str) -> String {
        dump_value(&eval(env, &parse(src).unwrap()).unwrap_or_else(|e| panic!("{src}: {e}")))
    }

    fn example_one() -> Environment {
        let mut env = Environment::new();
        env.bind_value("dict1", parse_value(r#"{ "a" -> 2, "b" -> 3 }"#).unwrap()).unwrap();
        env.bind_value("dict2", parse_value(r#"{ "a" -> 4, "c" -> 5 }"#).unwrap()).unwrap();
        env
    }

    #[test]
    fn example_one_sums() {
        let env = example_one();
        assert_eq!(run(&env, "sum(x in dict1) x.val"), "5");
        assert_eq!(run(&env, "sum(x in dict1) { x.key -> x.val * 2 }"), r#"{ "a" -> 4, "b" -> 6 }"#);
        assert_eq!(run(&env, "dict1 + dict2"), r#"{ "a" -> 6, "b" -> 3, "c" -> 5 }"#);
    }

    #[test]
    fn hadamard_of_example_seven() {
        let mut env = Environment::new();
        env.bind_value("V", parse_value("{ 0 -> 1, 2 -> 2, 3 -> 3 }").unwrap()).unwrap();
        env.bind_value("U", parse_value("{ 0 -> 4, 1 -> 5, 2 -> 6 }").unwrap()).unwrap();
        assert_eq!(run(&env, "sum(x in V) { x.key -> x.val * U(x.key) }"), "{ 0 -> 4, 2 -> 12 }");
    }

    #[test]
    fn empty_sum_and_misses() {
        let env = Environment::new();
        assert_eq!(run(&env, "sum(x in { }_{int,int}) x.val"), "0");
        assert_eq!(run(&env, "{1 -> 2}(5)"), "0");
        assert_eq!(run(&env, "{1 -> <a=2.0>}(5)"), "<a=0.0>");
        assert_eq!(run(&env, "sum<max_sum>(x in { }_{int,real}) x.val"), "-inf");
        assert_eq!(run(&env, "sum<max_sum>(x in {1 -> 5.0, 2 -> 2.0, 3 -> 9.0}) x.val"), "9.0");
    }

    #[test]
    fn metrics_count_body_executions() {
        let mut env = Environment::new();
        env.bind_value("M", parse_value("{ <row=0, col=0> -> 7, <row=0, col=3> -> 8, <row=1, col=1> -> 9 }").unwrap())
            .unwrap();
        env.bind_value("V", parse_value("{ 0 -> 1, 2 -> 2, 3 -> 3 }").unwrap()).unwrap();
        let e = parse("sum(x in M) { x.key.row -> x.val * V(x.key.col) }").unwrap();
        let (v, m) = eval_with_metrics(&env, &e).unwrap();
        assert_eq!(dump_value(&v), "{ 0 -> 31 }");
        assert_eq!(m.loop_iterations, 3);
        assert_eq!(m.lookups, 3);
        assert_eq!(m.scalar_mults, 3);
    }

    #[test]
    fn runtime_errors() {
        let env = Environment::new();
        let e = eval(&env, &parse("1.0 / 0.0").unwrap()).unwrap_err();
        assert_eq!(e.code(), "division-by-zero");
        let e = eval(&env, &parse("to_minprod((0.0))").unwrap()).unwrap_err();
        assert_eq!(e.code(), "semiring-domain-violation");
        let e = eval(&env, &parse("nope").unwrap()).unwrap_err();
        assert!(e.is_type_error());
    }

    #[test]
    fn dense_sums_visit_every_position() {
        let env = Environment::new();
        assert_eq!(run(&env, "sum(x in [| 0, 0, 5 |]) 1"), "3");
        assert_eq!(run(&env, "[| 1, 2 |] + [| 3, 4, 5 |]"), "[| 4, 6, 5 |]");
    }

    #[test]
    fn comparisons_and_records() {
        let env = Environment::new();
        assert_eq!(run(&env, "concat(<a=1>, <b=true>)"), "<a=1, b=true>");
        assert_eq!(run(&env, r#""abc" < "abd" && !(1 == 2)"#), "true");
        assert_eq!(run(&env, "range(3)"), "{ 0 -> true, 1 -> true, 2 -> true }");
        let t = parse_type("{ int -> int }").unwrap();
        let env = Environment::new().with("d", Value::empty_dict(), t);
        assert_eq!(run(&env, "sum(x in d) x.val"), "0");
    }
}
