//! Type checking and elaboration.
//!
//! Checking is bidirectional only as far as needed to type an unannotated
//! `{ }` from its context. Elaboration makes every promotion explicit, fills
//! in missing else branches with the zero of the branch type and annotates
//! empty dictionaries, so the output can be checked again without change.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::pretty::pretty;
use crate::syntax::{zero_expr, Expr};
use crate::types::{tensor_type, Layout, ScalarType, Type};
use crate::value::Value;
use crate::Name;

#[derive(Debug, Clone, PartialEq)]
pub struct TypeError {
    pub code: &'static str,
    pub msg: String,
    /// The offending sub-expression, pretty-printed.
    pub expr: String,
}

impl TypeError {
    fn new(code: &'static str, e: &Expr, msg: String) -> TypeError {
        let mut expr = pretty(e);
        if expr.len() > 160 {
            let cut = (0..=157).rev().find(|i| expr.is_char_boundary(*i)).unwrap_or(0);
            expr.truncate(cut);
            expr.push_str("...");
        }
        TypeError { code, msg, expr }
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} in `{}`", self.code, self.msg, self.expr)
    }
}

/// Typing context; later bindings shadow earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TypeEnv {
    bindings: Vec<(Name, Type)>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn bind(&mut self, x: impl Into<Name>, t: Type) {
        self.bindings.push((x.into(), t));
    }

    pub fn with(mut self, x: impl Into<Name>, t: Type) -> TypeEnv {
        self.bind(x, t);
        self
    }

    pub fn get(&self, x: &str) -> Option<&Type> {
        self.bindings.iter().rev().find(|(n, _)| &**n == x).map(|(_, t)| t)
    }

    fn pop(&mut self) {
        self.bindings.pop();
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.bindings.iter().map(|(n, _)| n)
    }
}

impl<S: Into<Name>> FromIterator<(S, Type)> for TypeEnv {
    fn from_iter<I: IntoIterator<Item = (S, Type)>>(it: I) -> Self {
        TypeEnv { bindings: it.into_iter().map(|(n, t)| (n.into(), t)).collect() }
    }
}

/// Types the evaluator needs at run time, keyed by node address: the body
/// type of every `sum` (its zero is the result of an empty loop) and the
/// dictionary type of every lookup target (its value zero answers a miss).
#[derive(Debug, Clone, Default)]
pub struct TypeTable {
    map: BTreeMap<usize, Type>,
}

impl TypeTable {
    pub fn get(&self, e: &Expr) -> Option<&Type> {
        self.map.get(&(e as *const Expr as usize))
    }

    fn record(&mut self, e: &Expr, t: &Type) {
        self.map.insert(e as *const Expr as usize, t.clone());
    }
}

/// Type check `e` under `env`, returning the elaborated term and its type.
pub fn typecheck(env: &TypeEnv, e: &Expr) -> Result<(Expr, Type), TypeError> {
    let mut c = Checker { env: env.clone(), table: None };
    c.check(e, None)
}

/// As [`typecheck`], pushing an expected type into the term.
pub fn typecheck_expecting(env: &TypeEnv, e: &Expr, expected: &Type) -> Result<(Expr, Type), TypeError> {
    let mut c = Checker { env: env.clone(), table: None };
    c.check(e, Some(expected))
}

pub fn type_of(env: &TypeEnv, e: &Expr) -> Result<Type, TypeError> {
    typecheck(env, e).map(|(_, t)| t)
}

/// Build the runtime type table for an already elaborated term.
pub fn annotate(env: &TypeEnv, e: &Expr) -> Result<(Type, TypeTable), TypeError> {
    let mut table = TypeTable::default();
    let mut c = Checker { env: env.clone(), table: Some(&mut table) };
    let (_, t) = c.check(e, None)?;
    Ok((t, table))
}

/// The type of a value, when it can be read off the value alone (an empty
/// dictionary anywhere makes it ambiguous).
pub fn type_of_value(v: &Value) -> Option<Type> {
    match v {
        Value::Record(fs) => Some(Type::Record(
            fs.iter().map(|(n, x)| Some((n.clone(), type_of_value(x)?))).collect::<Option<Vec<_>>>()?,
        )),
        Value::Dict(d) => {
            let mut kt: Option<Type> = None;
            let mut vt: Option<Type> = None;
            for (k, x) in d.entries() {
                if kt.is_none() {
                    kt = type_of_value(&k);
                }
                if vt.is_none() {
                    vt = type_of_value(x);
                }
                if kt.is_some() && vt.is_some() {
                    break;
                }
            }
            let (k, x) = (kt?, vt?);
            Some(match &**d {
                crate::value::Dict::Dense(_) => Type::array(x),
                crate::value::Dict::Hash(_) => Type::dict(k, x),
            })
        }
        scalar => Some(Type::Scalar(scalar.scalar_type()?)),
    }
}

/// Whether `v` inhabits `t` (dense layout is checked, empty dictionaries
/// inhabit every dictionary type of their layout).
pub fn value_has_type(v: &Value, t: &Type) -> bool {
    match (v, t) {
        (Value::Record(fs), Type::Record(ts)) => {
            fs.len() == ts.len()
                && fs.iter().zip(ts.iter()).all(|((n, x), (m, u))| n == m && value_has_type(x, u))
        }
        (Value::Dict(d), Type::Dict { key, val, layout }) => {
            let dense = matches!(&**d, crate::value::Dict::Dense(_));
            dense == (*layout == Layout::Dense)
                && d.entries().all(|(k, x)| value_has_type(&k, key) && value_has_type(x, val))
        }
        (x, Type::Scalar(s)) => x.scalar_type() == Some(*s),
        _ => false,
    }
}

struct Checker<'a> {
    env: TypeEnv,
    table: Option<&'a mut TypeTable>,
}

fn record_type(fs: &[(Name, Type)]) -> Type {
    Type::Record(fs.to_vec())
}

fn sum_var_type(key: &Type, val: &Type) -> Type {
    Type::record([("key", key.clone()), ("val", val.clone())])
}

/// The single scalar type of all value leaves, if there is one.
fn uniform_leaf(t: &Type) -> Option<ScalarType> {
    let mut leaves = Vec::new();
    t.value_leaves(&mut leaves);
    match leaves.as_slice() {
        [s] => Some(*s),
        _ => None,
    }
}

impl Checker<'_> {
    fn check(&mut self, e: &Expr, expected: Option<&Type>) -> Result<(Expr, Type), TypeError> {
        let r = self.check_inner(e, expected)?;
        Ok(r)
    }

    /// Check several terms that must share one type; unannotated empty
    /// dictionaries are retried once a sibling has fixed the type.
    fn check_same(
        &mut self,
        es: &[&Expr],
        expected: Option<&Type>,
    ) -> Result<(Vec<Expr>, Vec<Type>), TypeError> {
        let mut out: Vec<Option<(Expr, Type)>> = es.iter().map(|_| None).collect();
        let mut hint: Option<Type> = expected.cloned();
        let mut deferred = Vec::new();
        for (i, e) in es.iter().enumerate() {
            match self.check(e, hint.as_ref()) {
                Ok((x, t)) => {
                    if hint.is_none() {
                        hint = Some(t.clone());
                    }
                    out[i] = Some((x, t));
                }
                Err(err) if err.code == "cannot-infer-empty-dict" => deferred.push((i, err)),
                Err(err) => return Err(err),
            }
        }
        for (i, err) in deferred {
            match &hint {
                Some(h) => out[i] = Some(self.check(es[i], Some(h))?),
                None => return Err(err),
            }
        }
        Ok(out.into_iter().map(|o| o.expect("all checked")).unzip())
    }

    fn check_inner(&mut self, e: &Expr, expected: Option<&Type>) -> Result<(Expr, Type), TypeError> {
        match e {
            Expr::Lit(v) => match v.scalar_type() {
                Some(s) => Ok((e.clone(), Type::Scalar(s))),
                None => Err(TypeError::new("invalid-literal", e, "literals must be scalars".to_string())),
            },
            Expr::Var(x) => match self.env.get(x) {
                Some(t) => Ok((e.clone(), t.clone())),
                None => Err(TypeError::new("unbound-variable", e, format!("`{x}` is not bound"))),
            },
            Expr::Sum { var, src, body, tag } => {
                let (src2, st) = self.check(src, None)?;
                let (k, v) = match &st {
                    Type::Dict { key, val, .. } => ((**key).clone(), (**val).clone()),
                    other => {
                        return Err(TypeError::new(
                            "not-a-dictionary",
                            src,
                            format!("sum ranges over a dictionary, found {other}"),
                        ))
                    }
                };
                self.env.bind(var.clone(), sum_var_type(&k, &v));
                let r = self.check(body, if tag.is_none() { expected } else { None });
                self.env.pop();
                let (body2, bt) = r?;
                if !bt.is_semiring() {
                    return Err(TypeError::new(
                        "no-semiring-for-string-value",
                        body,
                        format!("sum body has type {bt}, which has no addition"),
                    ));
                }
                if let Some(k) = tag {
                    if uniform_leaf(&bt) != Some(ScalarType::Real) {
                        return Err(TypeError::new(
                            "invalid-conversion",
                            body,
                            format!("sum<{}> needs real leaves, found {bt}", k.type_name()),
                        ));
                    }
                }
                if let Some(tbl) = self.table.as_deref_mut() {
                    tbl.record(body, &bt);
                }
                Ok((Expr::Sum { var: var.clone(), src: Box::new(src2), body: Box::new(body2), tag: *tag }, bt))
            }
            Expr::DictLit { entries, layout } => {
                let (ek, ev) = match expected {
                    Some(Type::Dict { key, val, .. }) => (Some(&**key), Some(&**val)),
                    _ => (None, None),
                };
                let keys: Vec<&Expr> = entries.iter().map(|(k, _)| k).collect();
                let vals: Vec<&Expr> = entries.iter().map(|(_, v)| v).collect();
                let (ks, kts) = self.check_same(&keys, ek)?;
                let (vs, vts) = self.check_same(&vals, ev)?;
                if let Some(i) = (1..kts.len()).find(|i| kts[*i] != kts[0]) {
                    return Err(TypeError::new(
                        "dict-key-mismatch",
                        keys[i],
                        format!("key has type {}, expected {}", kts[i], kts[0]),
                    ));
                }
                if let Some(i) = (1..vts.len()).find(|i| vts[*i] != vts[0]) {
                    return Err(TypeError::new(
                        "dict-value-mismatch",
                        vals[i],
                        format!("value has type {}, expected {}", vts[i], vts[0]),
                    ));
                }
                if kts.is_empty() {
                    return Err(TypeError::new("cannot-infer-empty-dict", e, "empty literal".to_string()));
                }
                if *layout == Layout::Dense {
                    let positional = ks.iter().enumerate().all(|(i, k)| *k == Expr::Lit(Value::Int(i as i64)));
                    if kts[0] != Type::INT || !positional {
                        return Err(TypeError::new(
                            "dense-key-violation",
                            e,
                            "dense dictionaries need keys 0..n-1".to_string(),
                        ));
                    }
                }
                let t = Type::Dict { key: Box::new(kts[0].clone()), val: Box::new(vts[0].clone()), layout: *layout };
                Ok((Expr::DictLit { entries: ks.into_iter().zip(vs).collect(), layout: *layout }, t))
            }
            Expr::EmptyDict(Some(t)) => match t {
                Type::Dict { key, layout: Layout::Dense, .. } if **key != Type::INT => Err(TypeError::new(
                    "dense-key-violation",
                    e,
                    "dense dictionaries need int keys".to_string(),
                )),
                Type::Dict { .. } => Ok((e.clone(), t.clone())),
                other => Err(TypeError::new(
                    "not-a-dictionary",
                    e,
                    format!("empty dictionary annotated with {other}"),
                )),
            },
            Expr::EmptyDict(None) => match expected {
                Some(t @ Type::Dict { .. }) => Ok((Expr::EmptyDict(Some(t.clone())), t.clone())),
                _ => Err(TypeError::new(
                    "cannot-infer-empty-dict",
                    e,
                    "cannot infer the type of `{ }`; write `{ }_{K,V}`".to_string(),
                )),
            },
            Expr::Lookup(d, k) => {
                let (d2, dt) = self.check(d, None)?;
                let (kt, vt) = match &dt {
                    Type::Dict { key, val, .. } => ((**key).clone(), (**val).clone()),
                    other => {
                        return Err(TypeError::new(
                            "not-a-dictionary",
                            d,
                            format!("lookup target has type {other}"),
                        ))
                    }
                };
                let (k2, kt2) = self.check(k, Some(&kt))?;
                if kt2 != kt {
                    return Err(TypeError::new(
                        "lookup-key-mismatch",
                        k,
                        format!("key has type {kt2}, dictionary keys are {kt}"),
                    ));
                }
                if let Some(tbl) = self.table.as_deref_mut() {
                    tbl.record(d, &dt);
                }
                Ok((Expr::Lookup(Box::new(d2), Box::new(k2)), vt))
            }
            Expr::Record(fs) => {
                let mut out = Vec::with_capacity(fs.len());
                let mut ts = Vec::with_capacity(fs.len());
                for (n, x) in fs {
                    if ts.iter().any(|(m, _): &(Name, Type)| m == n) {
                        return Err(TypeError::new("duplicate-field", e, format!("field `{n}` repeated")));
                    }
                    let hint = expected.and_then(|t| t.field(n));
                    let (x2, t) = self.check(x, hint)?;
                    out.push((n.clone(), x2));
                    ts.push((n.clone(), t));
                }
                Ok((Expr::Record(out), record_type(&ts)))
            }
            Expr::Field(x, n) => {
                let (x2, t) = self.check(x, None)?;
                match t.field(n) {
                    Some(ft) => Ok((Expr::Field(Box::new(x2), n.clone()), ft.clone())),
                    None => Err(TypeError::new("field-not-found", e, format!("no field `{n}` in {t}"))),
                }
            }
            Expr::Let(x, e1, e2) => {
                let (e1b, t1) = self.check(e1, None)?;
                self.env.bind(x.clone(), t1);
                let r = self.check(e2, expected);
                self.env.pop();
                let (e2b, t2) = r?;
                Ok((Expr::Let(x.clone(), Box::new(e1b), Box::new(e2b)), t2))
            }
            Expr::If(c, t, el) => {
                let (c2, ct) = self.check(c, Some(&Type::BOOL))?;
                if ct != Type::BOOL {
                    return Err(TypeError::new("condition-not-bool", c, format!("condition has type {ct}")));
                }
                match el {
                    Some(el) => {
                        let (mut xs, ts) = self.check_same(&[t, el], expected)?;
                        if ts[0] != ts[1] {
                            return Err(TypeError::new(
                                "branch-mismatch",
                                e,
                                format!("then branch has type {}, else branch {}", ts[0], ts[1]),
                            ));
                        }
                        let el2 = xs.pop().expect("two");
                        let t2 = xs.pop().expect("two");
                        Ok((Expr::If(Box::new(c2), Box::new(t2), Some(Box::new(el2))), ts[0].clone()))
                    }
                    None => {
                        let (t2, tt) = self.check(t, expected)?;
                        let z = zero_expr(&tt).ok_or_else(|| {
                            TypeError::new(
                                "no-semiring-for-string-value",
                                e,
                                format!("if without else needs a zero of {tt}"),
                            )
                        })?;
                        Ok((Expr::If(Box::new(c2), Box::new(t2), Some(Box::new(z))), tt))
                    }
                }
            }
            Expr::Add(a, b) => {
                let (mut xs, ts) = self.check_same(&[a, b], expected)?;
                if ts[0] != ts[1] {
                    return Err(TypeError::new(
                        "add-type-mismatch",
                        e,
                        format!("cannot add {} and {}", ts[0], ts[1]),
                    ));
                }
                if !ts[0].is_semiring() {
                    return Err(TypeError::new(
                        "no-semiring-for-string-value",
                        e,
                        format!("{} has no addition", ts[0]),
                    ));
                }
                let b2 = xs.pop().expect("two");
                let a2 = xs.pop().expect("two");
                Ok((Expr::Add(Box::new(a2), Box::new(b2)), ts[0].clone()))
            }
            Expr::Mul(a, b) => {
                let (mut a2, mut ta) = self.check(a, None)?;
                let (mut b2, mut tb) = self.check(b, None)?;
                if tensor_type(&ta, &tb).is_none() {
                    return Err(TypeError::new(
                        "mul-undefined-tensor-type",
                        e,
                        format!("{ta} * {tb} is undefined"),
                    ));
                }
                // Make promotions explicit where one side is a scalar below
                // the other side's single leaf type.
                if let Some(s) = ta.as_scalar() {
                    if let Some(u) = uniform_leaf(&tb) {
                        if s != u && s.is_subtype_of(u) {
                            a2 = Expr::Promote(s, u, Box::new(a2));
                            ta = Type::Scalar(u);
                        }
                    }
                }
                if let Some(s) = tb.as_scalar() {
                    if let Some(u) = uniform_leaf(&ta) {
                        if s != u && s.is_subtype_of(u) {
                            b2 = Expr::Promote(s, u, Box::new(b2));
                            tb = Type::Scalar(u);
                        }
                    }
                }
                let t = tensor_type(&ta, &tb).expect("checked above");
                Ok((Expr::Mul(Box::new(a2), Box::new(b2)), t))
            }
            Expr::Promote(s, t, x) => {
                let (x2, xt) = self.check(x, None)?;
                if xt != Type::Scalar(*s) {
                    return Err(TypeError::new(
                        "invalid-promotion",
                        e,
                        format!("operand has type {xt}, annotated {s}"),
                    ));
                }
                if !s.is_subtype_of(*t) {
                    return Err(TypeError::new("invalid-promotion", e, format!("{s} is not a subtype of {t}")));
                }
                Ok((Expr::Promote(*s, *t, Box::new(x2)), Type::Scalar(*t)))
            }
            Expr::Cmp(op, a, b) => {
                let (mut xs, ts) = self.check_same(&[a, b], None)?;
                if ts[0] != ts[1] {
                    return Err(TypeError::new(
                        "cmp-type-mismatch",
                        e,
                        format!("cannot compare {} and {}", ts[0], ts[1]),
                    ));
                }
                let b2 = xs.pop().expect("two");
                let a2 = xs.pop().expect("two");
                Ok((Expr::Cmp(*op, Box::new(a2), Box::new(b2)), Type::BOOL))
            }
            Expr::Not(x) => {
                let (x2, t) = self.check(x, Some(&Type::BOOL))?;
                if t != Type::BOOL {
                    return Err(TypeError::new("condition-not-bool", x, format!("`!` applied to {t}")));
                }
                Ok((Expr::Not(Box::new(x2)), Type::BOOL))
            }
            Expr::Concat(a, b) => {
                let (a2, ta) = self.check(a, None)?;
                let (b2, tb) = self.check(b, None)?;
                match (&ta, &tb) {
                    (Type::Record(fa), Type::Record(fb)) => {
                        if let Some((n, _)) = fb.iter().find(|(n, _)| fa.iter().any(|(m, _)| m == n)) {
                            return Err(TypeError::new(
                                "concat-field-clash",
                                e,
                                format!("field `{n}` appears on both sides"),
                            ));
                        }
                        let mut fs = fa.clone();
                        fs.extend(fb.iter().cloned());
                        Ok((Expr::Concat(Box::new(a2), Box::new(b2)), Type::Record(fs)))
                    }
                    _ => Err(TypeError::new(
                        "not-a-record",
                        e,
                        format!("concat needs two records, found {ta} and {tb}"),
                    )),
                }
            }
            Expr::Div(a, b) => {
                let (a2, ta) = self.check(a, None)?;
                let (b2, tb) = self.check(b, None)?;
                let to_real = |x: Expr, t: &Type| -> Result<Expr, TypeError> {
                    match t.as_scalar() {
                        Some(ScalarType::Real) => Ok(x),
                        Some(s @ (ScalarType::Int | ScalarType::Bool)) => {
                            Ok(Expr::Promote(s, ScalarType::Real, Box::new(x)))
                        }
                        _ => Err(TypeError::new("invalid-division", e, format!("cannot divide {t}"))),
                    }
                };
                let a3 = to_real(a2, &ta)?;
                let b3 = to_real(b2, &tb)?;
                Ok((Expr::Div(Box::new(a3), Box::new(b3)), Type::REAL))
            }
            Expr::Wrap(target, x) => {
                let (x2, t) = self.check(x, None)?;
                let from = match target {
                    ScalarType::Nat => ScalarType::Int,
                    ScalarType::Tagged(_) => ScalarType::Real,
                    _ => return Err(TypeError::new("invalid-conversion", e, format!("no conversion to {target}"))),
                };
                if uniform_leaf(&t) != Some(from) {
                    return Err(TypeError::new(
                        "invalid-conversion",
                        e,
                        format!("to_{} needs {from} leaves, found {t}", conv_suffix(*target)),
                    ));
                }
                let t2 = t.map_leaves(&|_| Some(*target)).expect("total");
                Ok((Expr::Wrap(*target, Box::new(x2)), t2))
            }
            Expr::Unwrap(source, x) => {
                let (x2, t) = self.check(x, None)?;
                let to = match source {
                    ScalarType::Nat => ScalarType::Int,
                    ScalarType::Tagged(_) => ScalarType::Real,
                    _ => return Err(TypeError::new("invalid-conversion", e, format!("no conversion from {source}"))),
                };
                if uniform_leaf(&t) != Some(*source) {
                    return Err(TypeError::new(
                        "invalid-conversion",
                        e,
                        format!("from_{} needs {source} leaves, found {t}", conv_suffix(*source)),
                    ));
                }
                let t2 = t.map_leaves(&|_| Some(to)).expect("total");
                Ok((Expr::Unwrap(*source, Box::new(x2)), t2))
            }
            Expr::Range(x) => {
                let (x2, t) = self.check(x, Some(&Type::INT))?;
                if t != Type::INT {
                    return Err(TypeError::new("invalid-range", e, format!("range bound has type {t}")));
                }
                Ok((Expr::Range(Box::new(x2)), Type::set(Type::INT)))
            }
        }
    }
}

fn conv_suffix(t: ScalarType) -> &'static str {
    match t {
        ScalarType::Tagged(k) => k.fn_suffix(),
        other => other.name(),
    }
}
