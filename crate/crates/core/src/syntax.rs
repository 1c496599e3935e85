//! Abstract syntax, variable handling and value/term conversion.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::types::{Layout, ScalarType, TaggedKind, Type};
use crate::value::{Dict, Value};
use crate::Name;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Scalar literal (including tagged and nat constants).
    Lit(Value),
    Var(Name),
    /// `sum(var in src) body`; with a tag `T` it means
    /// `from_T(sum(var in src) to_T(body))`.
    Sum {
        var: Name,
        src: Box<Expr>,
        body: Box<Expr>,
        tag: Option<TaggedKind>,
    },
    DictLit {
        entries: Vec<(Expr, Expr)>,
        layout: Layout,
    },
    /// Empty dictionary; holds the full dictionary type once elaborated.
    EmptyDict(Option<Type>),
    Lookup(Box<Expr>, Box<Expr>),
    Record(Vec<(Name, Expr)>),
    Field(Box<Expr>, Name),
    Let(Name, Box<Expr>, Box<Expr>),
    /// A missing else branch stands for the zero of the then branch's type.
    If(Box<Expr>, Box<Expr>, Option<Box<Expr>>),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Promote(ScalarType, ScalarType, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Concat(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// `to_T(e)`: real (or int, for nat) leaves into the semiring `T`.
    Wrap(ScalarType, Box<Expr>),
    /// `from_T(e)`: inverse of [`Expr::Wrap`].
    Unwrap(ScalarType, Box<Expr>),
    /// `range(e)`: the set `{0, ..., e-1}`.
    Range(Box<Expr>),
}

pub fn var(n: &str) -> Expr {
    Expr::Var(n.into())
}

pub fn int(i: i64) -> Expr {
    Expr::Lit(Value::Int(i))
}

pub fn real(r: f64) -> Expr {
    Expr::Lit(Value::Real(r))
}

pub fn boolean(b: bool) -> Expr {
    Expr::Lit(Value::Bool(b))
}

pub fn string(s: &str) -> Expr {
    Expr::Lit(Value::str(s))
}

pub fn field(e: Expr, f: &str) -> Expr {
    Expr::Field(Box::new(e), f.into())
}

pub fn key_of(x: &str) -> Expr {
    field(var(x), "key")
}

pub fn val_of(x: &str) -> Expr {
    field(var(x), "val")
}

pub fn add(a: Expr, b: Expr) -> Expr {
    Expr::Add(Box::new(a), Box::new(b))
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    Expr::Mul(Box::new(a), Box::new(b))
}

pub fn lookup(d: Expr, k: Expr) -> Expr {
    Expr::Lookup(Box::new(d), Box::new(k))
}

pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
    Expr::Cmp(op, Box::new(a), Box::new(b))
}

pub fn concat(a: Expr, b: Expr) -> Expr {
    Expr::Concat(Box::new(a), Box::new(b))
}

pub fn sum(x: &str, src: Expr, body: Expr) -> Expr {
    Expr::Sum {
        var: x.into(),
        src: Box::new(src),
        body: Box::new(body),
        tag: None,
    }
}

pub fn let_in(x: &str, e1: Expr, e2: Expr) -> Expr {
    Expr::Let(x.into(), Box::new(e1), Box::new(e2))
}

pub fn if_then(c: Expr, t: Expr, e: Option<Expr>) -> Expr {
    Expr::If(Box::new(c), Box::new(t), e.map(Box::new))
}

pub fn singleton(k: Expr, v: Expr) -> Expr {
    Expr::DictLit {
        entries: alloc::vec![(k, v)],
        layout: Layout::Hash,
    }
}

pub fn record<S: Into<Name>>(fs: impl IntoIterator<Item = (S, Expr)>) -> Expr {
    Expr::Record(fs.into_iter().map(|(n, e)| (n.into(), e)).collect())
}

pub fn empty(t: Option<Type>) -> Expr {
    Expr::EmptyDict(t)
}

impl Expr {
    /// Immediate sub-expressions in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::EmptyDict(_) => Vec::new(),
            Expr::Sum { src, body, .. } => alloc::vec![&**src, &**body],
            Expr::DictLit { entries, .. } => entries.iter().flat_map(|(k, v)| [k, v]).collect(),
            Expr::Record(fs) => fs.iter().map(|(_, e)| e).collect(),
            Expr::Field(e, _)
            | Expr::Promote(_, _, e)
            | Expr::Not(e)
            | Expr::Wrap(_, e)
            | Expr::Unwrap(_, e)
            | Expr::Range(e) => alloc::vec![&**e],
            Expr::Let(_, a, b)
            | Expr::Lookup(a, b)
            | Expr::Add(a, b)
            | Expr::Mul(a, b)
            | Expr::Cmp(_, a, b)
            | Expr::Concat(a, b)
            | Expr::Div(a, b) => alloc::vec![&**a, &**b],
            Expr::If(c, t, e) => {
                let mut v = alloc::vec![&**c, &**t];
                if let Some(e) = e {
                    v.push(&**e);
                }
                v
            }
        }
    }

    /// Rebuild with every immediate sub-expression passed through `f`.
    /// Binders are left untouched.
    pub fn map_children(self, f: &mut impl FnMut(Expr) -> Expr) -> Expr {
        let mut b = |e: Box<Expr>| Box::new(f(*e));
        match self {
            e @ (Expr::Lit(_) | Expr::Var(_) | Expr::EmptyDict(_)) => e,
            Expr::Sum { var, src, body, tag } => {
                let src = b(src);
                Expr::Sum { var, src, body: b(body), tag }
            }
            Expr::DictLit { entries, layout } => Expr::DictLit {
                entries: entries.into_iter().map(|(k, v)| (f(k), f(v))).collect(),
                layout,
            },
            Expr::Record(fs) => Expr::Record(fs.into_iter().map(|(n, e)| (n, f(e))).collect()),
            Expr::Field(e, n) => Expr::Field(b(e), n),
            Expr::Promote(s, t, e) => Expr::Promote(s, t, b(e)),
            Expr::Not(e) => Expr::Not(b(e)),
            Expr::Wrap(s, e) => Expr::Wrap(s, b(e)),
            Expr::Unwrap(s, e) => Expr::Unwrap(s, b(e)),
            Expr::Range(e) => Expr::Range(b(e)),
            Expr::Let(x, e1, e2) => {
                let e1 = b(e1);
                Expr::Let(x, e1, b(e2))
            }
            Expr::Lookup(x, y) => {
                let x = b(x);
                Expr::Lookup(x, b(y))
            }
            Expr::Add(x, y) => {
                let x = b(x);
                Expr::Add(x, b(y))
            }
            Expr::Mul(x, y) => {
                let x = b(x);
                Expr::Mul(x, b(y))
            }
            Expr::Cmp(op, x, y) => {
                let x = b(x);
                Expr::Cmp(op, x, b(y))
            }
            Expr::Concat(x, y) => {
                let x = b(x);
                Expr::Concat(x, b(y))
            }
            Expr::Div(x, y) => {
                let x = b(x);
                Expr::Div(x, b(y))
            }
            Expr::If(c, t, e) => {
                let c = b(c);
                let t = b(t);
                Expr::If(c, t, e.map(b))
            }
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Expr::size).sum::<usize>()
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        free_vars_into(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn mentions(&self, x: &str) -> bool {
        occurrences(self, x) > 0
    }
}

fn free_vars_into(e: &Expr, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match e {
        Expr::Var(n) => {
            if !bound.contains(n) {
                out.insert(n.clone());
            }
        }
        Expr::Sum { var, src, body, .. } => {
            free_vars_into(src, bound, out);
            bound.push(var.clone());
            free_vars_into(body, bound, out);
            bound.pop();
        }
        Expr::Let(x, e1, e2) => {
            free_vars_into(e1, bound, out);
            bound.push(x.clone());
            free_vars_into(e2, bound, out);
            bound.pop();
        }
        _ => {
            for c in e.children() {
                free_vars_into(c, bound, out);
            }
        }
    }
}

/// Number of free occurrences of `x` in `e`.
pub fn occurrences(e: &Expr, x: &str) -> usize {
    match e {
        Expr::Var(n) => (&**n == x) as usize,
        Expr::Sum { var, src, body, .. } => {
            occurrences(src, x) + if &**var == x { 0 } else { occurrences(body, x) }
        }
        Expr::Let(y, e1, e2) => occurrences(e1, x) + if &**y == x { 0 } else { occurrences(e2, x) },
        _ => e.children().into_iter().map(|c| occurrences(c, x)).sum(),
    }
}

/// A name based on `base` that is not in `avoid`.
pub fn fresh(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '_');
    let stem = if stem.is_empty() { "v" } else { stem };
    if !avoid.contains(base) && !base.is_empty() {
        return base.into();
    }
    (1..)
        .map(|i| format!("{stem}_{i}"))
        .find(|n| !avoid.contains(n.as_str()))
        .map(|n| Name::from(n.as_str()))
        .expect("unbounded name supply")
}

/// All names bound or free anywhere in `e`.
pub fn all_names(e: &Expr, out: &mut BTreeSet<Name>) {
    match e {
        Expr::Var(n) => {
            out.insert(n.clone());
        }
        Expr::Sum { var, .. } | Expr::Let(var, ..) => {
            out.insert(var.clone());
        }
        _ => {}
    }
    for c in e.children() {
        all_names(c, out);
    }
}

/// Rename the bound variable of a binder so it avoids `avoid`; returns the
/// new name and the body with the binder renamed.
fn rebind(x: &Name, body: Expr, avoid: &BTreeSet<Name>) -> (Name, Expr) {
    if !avoid.contains(x) {
        return (x.clone(), body);
    }
    let mut av = avoid.clone();
    all_names(&body, &mut av);
    let y = fresh(x, &av);
    let body = subst(body, x, &Expr::Var(y.clone()));
    (y, body)
}

/// Capture-avoiding substitution `e[v/x]`.
pub fn subst(e: Expr, x: &str, v: &Expr) -> Expr {
    let fv = v.free_vars();
    subst_with(e, x, v, &fv)
}

fn subst_with(e: Expr, x: &str, v: &Expr, fv: &BTreeSet<Name>) -> Expr {
    if !e.mentions(x) {
        return e;
    }
    match e {
        Expr::Var(n) if &*n == x => v.clone(),
        Expr::Sum { var, src, body, tag } => {
            let src = Box::new(subst_with(*src, x, v, fv));
            if &*var == x {
                return Expr::Sum { var, src, body, tag };
            }
            let (var, body) = rebind(&var, *body, fv);
            Expr::Sum {
                var,
                src,
                body: Box::new(subst_with(body, x, v, fv)),
                tag,
            }
        }
        Expr::Let(y, e1, e2) => {
            let e1 = Box::new(subst_with(*e1, x, v, fv));
            if &*y == x {
                return Expr::Let(y, e1, e2);
            }
            let (y, e2) = rebind(&y, *e2, fv);
            Expr::Let(y, e1, Box::new(subst_with(e2, x, v, fv)))
        }
        other => other.map_children(&mut |c| subst_with(c, x, v, fv)),
    }
}

/// Replace `x.key` by `k`, `x.val` by `v`, and any other use of `x` by
/// the record `<key=k, val=v>`.
pub fn subst_proj(e: Expr, x: &str, k: &Expr, v: &Expr) -> Expr {
    let mut fv = k.free_vars();
    fv.extend(v.free_vars());
    subst_proj_with(e, x, k, v, &fv)
}

fn subst_proj_with(e: Expr, x: &str, k: &Expr, v: &Expr, fv: &BTreeSet<Name>) -> Expr {
    if !e.mentions(x) {
        return e;
    }
    match e {
        Expr::Field(inner, f) if matches!(&*inner, Expr::Var(n) if &**n == x) => match &*f {
            "key" => k.clone(),
            "val" => v.clone(),
            _ => Expr::Field(Box::new(record([("key", k.clone()), ("val", v.clone())])), f),
        },
        Expr::Var(n) if &*n == x => record([("key", k.clone()), ("val", v.clone())]),
        Expr::Sum { var, src, body, tag } => {
            let src = Box::new(subst_proj_with(*src, x, k, v, fv));
            if &*var == x {
                return Expr::Sum { var, src, body, tag };
            }
            let (var, body) = rebind(&var, *body, fv);
            Expr::Sum {
                var,
                src,
                body: Box::new(subst_proj_with(body, x, k, v, fv)),
                tag,
            }
        }
        Expr::Let(y, e1, e2) => {
            let e1 = Box::new(subst_proj_with(*e1, x, k, v, fv));
            if &*y == x {
                return Expr::Let(y, e1, e2);
            }
            let (y, e2) = rebind(&y, *e2, fv);
            Expr::Let(y, e1, Box::new(subst_proj_with(e2, x, k, v, fv)))
        }
        other => other.map_children(&mut |c| subst_proj_with(c, x, k, v, fv)),
    }
}

/// Alpha-equivalence: equal up to consistent renaming of bound variables.
pub fn alpha_eq(a: &Expr, b: &Expr) -> bool {
    alpha_eq_in(a, b, &mut Vec::new())
}

fn alpha_eq_in(a: &Expr, b: &Expr, env: &mut Vec<(Name, Name)>) -> bool {
    match (a, b) {
        (Expr::Var(x), Expr::Var(y)) => {
            for (l, r) in env.iter().rev() {
                if l == x || r == y {
                    return l == x && r == y;
                }
            }
            x == y
        }
        (
            Expr::Sum { var: x, src: s1, body: b1, tag: t1 },
            Expr::Sum { var: y, src: s2, body: b2, tag: t2 },
        ) => {
            if t1 != t2 || !alpha_eq_in(s1, s2, env) {
                return false;
            }
            env.push((x.clone(), y.clone()));
            let r = alpha_eq_in(b1, b2, env);
            env.pop();
            r
        }
        (Expr::Let(x, a1, a2), Expr::Let(y, b1, b2)) => {
            if !alpha_eq_in(a1, b1, env) {
                return false;
            }
            env.push((x.clone(), y.clone()));
            let r = alpha_eq_in(a2, b2, env);
            env.pop();
            r
        }
        _ => {
            if core::mem::discriminant(a) != core::mem::discriminant(b) || !same_head(a, b) {
                return false;
            }
            let (ca, cb) = (a.children(), b.children());
            ca.len() == cb.len() && ca.iter().zip(cb.iter()).all(|(x, y)| alpha_eq_in(x, y, env))
        }
    }
}

/// Compare the non-child payload of two nodes of the same variant.
fn same_head(a: &Expr, b: &Expr) -> bool {
    match (a, b) {
        (Expr::Lit(x), Expr::Lit(y)) => x == y,
        (Expr::EmptyDict(x), Expr::EmptyDict(y)) => x == y,
        (Expr::DictLit { entries: e1, layout: l1 }, Expr::DictLit { entries: e2, layout: l2 }) => {
            l1 == l2 && e1.len() == e2.len()
        }
        (Expr::Record(f1), Expr::Record(f2)) => {
            f1.len() == f2.len() && f1.iter().zip(f2.iter()).all(|(x, y)| x.0 == y.0)
        }
        (Expr::Field(_, f), Expr::Field(_, g)) => f == g,
        (Expr::Promote(a1, b1, _), Expr::Promote(a2, b2, _)) => a1 == a2 && b1 == b2,
        (Expr::Cmp(o1, ..), Expr::Cmp(o2, ..)) => o1 == o2,
        (Expr::Wrap(s, _), Expr::Wrap(t, _)) | (Expr::Unwrap(s, _), Expr::Unwrap(t, _)) => s == t,
        (Expr::If(_, _, e1), Expr::If(_, _, e2)) => e1.is_some() == e2.is_some(),
        _ => true,
    }
}

/// The zero of `t` as a term.
pub fn zero_expr(t: &Type) -> Option<Expr> {
    Some(match t {
        Type::Scalar(s) => Expr::Lit(crate::semiring::zero_of(&Type::Scalar(*s)).ok()?),
        Type::Record(fs) => Expr::Record(
            fs.iter()
                .map(|(n, t)| Some((n.clone(), zero_expr(t)?)))
                .collect::<Option<Vec<_>>>()?,
        ),
        Type::Dict { val, .. } => {
            if !val.is_semiring() {
                return None;
            }
            Expr::EmptyDict(Some(t.clone()))
        }
    })
}

/// Embed a value of type `t` as a term in value form.
pub fn expr_of_value(v: &Value, t: &Type) -> Expr {
    match v {
        Value::Record(fs) => Expr::Record(
            fs.iter()
                .map(|(n, x)| {
                    let ft = t.field(n).cloned().unwrap_or(Type::INT);
                    (n.clone(), expr_of_value(x, &ft))
                })
                .collect(),
        ),
        Value::Dict(d) => {
            if d.is_empty() {
                return Expr::EmptyDict(Some(t.clone()));
            }
            let (kt, vt) = match t {
                Type::Dict { key, val, .. } => ((**key).clone(), (**val).clone()),
                _ => (Type::INT, Type::INT),
            };
            let layout = match &**d {
                Dict::Hash(_) => Layout::Hash,
                Dict::Dense(_) => Layout::Dense,
            };
            Expr::DictLit {
                entries: d
                    .entries()
                    .map(|(k, x)| (expr_of_value(&k, &kt), expr_of_value(x, &vt)))
                    .collect(),
                layout,
            }
        }
        scalar => Expr::Lit(scalar.clone()),
    }
}

/// Whether `e` is in value form: canonical, closed, fully evaluated.
pub fn is_value(e: &Expr) -> bool {
    value_of_expr(e).is_some_and(|v| match e {
        Expr::DictLit { layout: Layout::Hash, .. } => {
            matches!(&v, Value::Dict(d) if d.len() == dict_len(e))
                && e_is_canonical_order(e)
        }
        Expr::DictLit { entries, .. } => entries.iter().all(|(k, v)| is_value(k) && is_value(v)),
        Expr::Record(fs) => fs.iter().all(|(_, x)| is_value(x)),
        _ => true,
    })
}

fn dict_len(e: &Expr) -> usize {
    match e {
        Expr::DictLit { entries, .. } => entries.len(),
        _ => 0,
    }
}

fn e_is_canonical_order(e: &Expr) -> bool {
    let Expr::DictLit { entries, .. } = e else {
        return true;
    };
    let keys: Option<Vec<Value>> = entries.iter().map(|(k, _)| value_of_expr(k)).collect();
    let Some(keys) = keys else { return false };
    keys.windows(2).all(|w| w[0] < w[1])
        && entries.iter().all(|(k, v)| is_value(k) && is_value(v))
}

/// Read back a term in value form. Hash dictionaries are canonicalized, so
/// callers that need to know whether the term itself was canonical should
/// use [`is_value`].
pub fn value_of_expr(e: &Expr) -> Option<Value> {
    match e {
        Expr::Lit(v) => Some(v.clone()),
        Expr::Record(fs) => Some(Value::Record(Arc::new(
            fs.iter()
                .map(|(n, x)| Some((n.clone(), value_of_expr(x)?)))
                .collect::<Option<Vec<_>>>()?,
        ))),
        Expr::EmptyDict(Some(Type::Dict { layout: Layout::Dense, .. })) => Some(Value::array(Vec::new())),
        Expr::EmptyDict(Some(Type::Dict { .. })) => Some(Value::empty_dict()),
        Expr::DictLit { entries, layout: Layout::Hash } => {
            let mut m = alloc::collections::BTreeMap::new();
            for (k, v) in entries {
                let k = value_of_expr(k)?;
                let v = value_of_expr(v)?;
                if m.contains_key(&k) || v.is_zero() {
                    return None;
                }
                m.insert(k, v);
            }
            Some(Value::Dict(Arc::new(Dict::Hash(m))))
        }
        Expr::DictLit { entries, layout: Layout::Dense } => {
            let mut xs = Vec::with_capacity(entries.len());
            for (i, (k, v)) in entries.iter().enumerate() {
                if *k != Expr::Lit(Value::Int(i as i64)) {
                    return None;
                }
                xs.push(value_of_expr(v)?);
            }
            Some(Value::array(xs))
        }
        _ => None,
    }
}
