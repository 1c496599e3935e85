//! Runtime values in canonical form, their total order, and canonical text.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::types::{ScalarType, TaggedKind};
use crate::Name;

/// A runtime value. Dictionaries and records are shared behind `Arc`, so
/// cloning a value never copies collection contents.
#[derive(Debug, Clone)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Nat(u64),
    Real(f64),
    Tagged(TaggedKind, f64),
    Str(Arc<str>),
    Record(Arc<Vec<(Name, Value)>>),
    Dict(Arc<Dict>),
}

/// Dictionary storage.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dict {
    /// Sparse map, keys in the total value order, no zero-valued entries.
    Hash(BTreeMap<Value, Value>),
    /// Dense array; position `i` is the entry for key `i`.
    Dense(Vec<Value>),
}

impl Dict {
    pub fn len(&self) -> usize {
        match self {
            Dict::Hash(m) => m.len(),
            Dict::Dense(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries in iteration order (ascending keys).
    pub fn entries(&self) -> DictIter<'_> {
        match self {
            Dict::Hash(m) => DictIter::Hash(m.iter()),
            Dict::Dense(v) => DictIter::Dense(v.iter().enumerate()),
        }
    }

    pub fn get(&self, key: &Value) -> Option<&Value> {
        match self {
            Dict::Hash(m) => m.get(key),
            Dict::Dense(v) => match key {
                Value::Int(i) if *i >= 0 => v.get(*i as usize),
                _ => None,
            },
        }
    }
}

pub enum DictIter<'a> {
    Hash(alloc::collections::btree_map::Iter<'a, Value, Value>),
    Dense(core::iter::Enumerate<core::slice::Iter<'a, Value>>),
}

impl<'a> Iterator for DictIter<'a> {
    type Item = (Value, &'a Value);

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            DictIter::Hash(it) => it.next().map(|(k, v)| (k.clone(), v)),
            DictIter::Dense(it) => it.next().map(|(i, v)| (Value::Int(i as i64), v)),
        }
    }
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn record<I, S>(fields: I) -> Value
    where
        I: IntoIterator<Item = (S, Value)>,
        S: Into<Name>,
    {
        Value::Record(Arc::new(
            fields.into_iter().map(|(n, v)| (n.into(), v)).collect(),
        ))
    }

    /// Build a sparse dictionary. Duplicate keys are combined with semiring
    /// addition and zero-valued entries dropped.
    pub fn dict<I>(entries: I) -> Result<Value, crate::ValueError>
    where
        I: IntoIterator<Item = (Value, Value)>,
    {
        let mut m = BTreeMap::new();
        for (k, v) in entries {
            crate::semiring::insert_add(&mut m, k, v)?;
        }
        Ok(Value::Dict(Arc::new(Dict::Hash(m))))
    }

    pub fn empty_dict() -> Value {
        Value::Dict(Arc::new(Dict::Hash(BTreeMap::new())))
    }

    pub fn array(items: Vec<Value>) -> Value {
        Value::Dict(Arc::new(Dict::Dense(items)))
    }

    /// Set of keys, each mapped to `true`.
    pub fn set<I: IntoIterator<Item = Value>>(items: I) -> Value {
        let m = items
            .into_iter()
            .map(|k| (canonicalize(&k), Value::Bool(true)))
            .collect();
        Value::Dict(Arc::new(Dict::Hash(m)))
    }

    pub fn as_dict(&self) -> Option<&Dict> {
        match self {
            Value::Dict(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_record(&self) -> Option<&[(Name, Value)]> {
        match self {
            Value::Record(r) => Some(r),
            _ => None,
        }
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        self.as_record()?
            .iter()
            .find(|(n, _)| &**n == name)
            .map(|(_, v)| v)
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    /// Scalar kind of a scalar value.
    pub fn scalar_type(&self) -> Option<ScalarType> {
        Some(match self {
            Value::Bool(_) => ScalarType::Bool,
            Value::Int(_) => ScalarType::Int,
            Value::Nat(_) => ScalarType::Nat,
            Value::Real(_) => ScalarType::Real,
            Value::Tagged(k, _) => ScalarType::Tagged(*k),
            Value::Str(_) => ScalarType::Str,
            _ => return None,
        })
    }

    pub fn is_scalar(&self) -> bool {
        self.scalar_type().is_some()
    }

    /// Whether this value is the additive identity of its type. Strings are
    /// never zero, so records holding strings are never dropped.
    pub fn is_zero(&self) -> bool {
        match self {
            Value::Bool(b) => !b,
            Value::Int(i) => *i == 0,
            Value::Nat(n) => *n == 0,
            Value::Real(r) => *r == 0.0,
            Value::Tagged(k, x) => *x == crate::semiring::tagged_zero(*k),
            Value::Str(_) => false,
            Value::Record(fs) => fs.iter().all(|(_, v)| v.is_zero()),
            Value::Dict(d) => d.is_empty(),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Bool(_) => 0,
            Value::Int(_) => 1,
            Value::Nat(_) => 2,
            Value::Real(_) => 3,
            Value::Tagged(..) => 4,
            Value::Str(_) => 5,
            Value::Record(_) => 6,
            Value::Dict(_) => 7,
        }
    }
}

fn norm_f64(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x.is_nan() {
        f64::NAN
    } else {
        x
    }
}

fn cmp_f64(a: f64, b: f64) -> Ordering {
    norm_f64(a).total_cmp(&norm_f64(b))
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        use Value::*;
        match (self, other) {
            (Bool(a), Bool(b)) => a.cmp(b),
            (Int(a), Int(b)) => a.cmp(b),
            (Nat(a), Nat(b)) => a.cmp(b),
            (Real(a), Real(b)) => cmp_f64(*a, *b),
            (Tagged(k1, a), Tagged(k2, b)) => k1.cmp(k2).then_with(|| cmp_f64(*a, *b)),
            (Str(a), Str(b)) => a.cmp(b),
            (Record(a), Record(b)) => {
                if Arc::ptr_eq(a, b) {
                    return Ordering::Equal;
                }
                a.iter().cmp(b.iter())
            }
            (Dict(a), Dict(b)) => {
                if Arc::ptr_eq(a, b) {
                    return Ordering::Equal;
                }
                a.cmp(b)
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

/// Canonical form: zero-valued sparse entries removed, keys canonicalized and
/// re-sorted (colliding keys are combined), reals normalized. Idempotent.
pub fn canonicalize(v: &Value) -> Value {
    match v {
        Value::Real(r) => Value::Real(norm_f64(*r)),
        Value::Tagged(k, r) => Value::Tagged(*k, norm_f64(*r)),
        Value::Record(fs) => Value::Record(Arc::new(
            fs.iter()
                .map(|(n, v)| (n.clone(), canonicalize(v)))
                .collect(),
        )),
        Value::Dict(d) => match &**d {
            Dict::Hash(m) => {
                let mut out = BTreeMap::new();
                for (k, v) in m {
                    let v = canonicalize(v);
                    // Values of one dictionary share a type; combining keys that
                    // collide after canonicalization cannot fail on well-typed data.
                    if crate::semiring::insert_add(&mut out, canonicalize(k), v.clone()).is_err() {
                        out.insert(canonicalize(k), v);
                    }
                }
                Value::Dict(Arc::new(Dict::Hash(out)))
            }
            Dict::Dense(items) => {
                Value::Dict(Arc::new(Dict::Dense(items.iter().map(canonicalize).collect())))
            }
        },
        other => other.clone(),
    }
}

/// Semantic equality: structural identity of canonical forms.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    canonicalize(a) == canonicalize(b)
}

/// Write a real so that it always reads back as a real: a decimal point is
/// added to integral values, infinities print as `inf` / `-inf`.
pub fn fmt_real(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x.is_nan() {
        f.write_str("nan")
    } else if x.is_infinite() {
        f.write_str(if x > 0.0 { "inf" } else { "-inf" })
    } else {
        let x = norm_f64(x);
        let s = alloc::format!("{x}");
        if s.contains('.') {
            f.write_str(&s)
        } else {
            write!(f, "{s}.0")
        }
    }
}

pub fn fmt_str_literal(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

/// Canonical value text. Callers are expected to print canonical values;
/// printing does not canonicalize.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Nat(n) => write!(f, "to_nat({n})"),
            Value::Real(r) => fmt_real(f, *r),
            Value::Tagged(k, r) => {
                write!(f, "to_{}(", k.fn_suffix())?;
                fmt_real(f, *r)?;
                f.write_str(")")
            }
            Value::Str(s) => fmt_str_literal(f, s),
            Value::Record(fs) => {
                f.write_str("<")?;
                for (i, (n, v)) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}={v}")?;
                }
                f.write_str(">")
            }
            Value::Dict(d) => match &**d {
                Dict::Hash(m) if m.is_empty() => f.write_str("{ }"),
                Dict::Hash(m) => {
                    f.write_str("{ ")?;
                    for (i, (k, v)) in m.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{k} -> {v}")?;
                    }
                    f.write_str(" }")
                }
                Dict::Dense(items) if items.is_empty() => f.write_str("[| |]"),
                Dict::Dense(items) => {
                    f.write_str("[| ")?;
                    for (i, v) in items.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{v}")?;
                    }
                    f.write_str(" |]")
                }
            },
        }
    }
}

/// Canonical text of a value (canonicalizing first).
pub fn dump_value(v: &Value) -> String {
    alloc::format!("{}", canonicalize(v))
}
