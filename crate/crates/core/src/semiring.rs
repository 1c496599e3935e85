//! Semiring algebra over values: zero, one, addition, the generalized
//! (outer-product) multiplication, promotion and lookup.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::types::{ScalarType, TaggedKind, Type};
use crate::value::{canonicalize, Dict, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValueError {
    #[error("no-semiring-for-string-value: {0}")]
    NoSemiring(String),
    #[error("add-type-mismatch: cannot add {0} and {1}")]
    AddMismatch(String, String),
    #[error("mul-undefined-tensor-type: cannot multiply {0} and {1}")]
    MulUndefined(String, String),
    #[error("invalid-promotion: {0} to {1}")]
    InvalidPromotion(String, String),
    #[error("semiring-domain-violation: {0} is outside the carrier of {1}")]
    Domain(String, &'static str),
    #[error("dense-key-violation: {0}")]
    DenseKey(String),
}

impl ValueError {
    pub fn code(&self) -> &'static str {
        match self {
            ValueError::NoSemiring(_) => "no-semiring-for-string-value",
            ValueError::AddMismatch(..) => "add-type-mismatch",
            ValueError::MulUndefined(..) => "mul-undefined-tensor-type",
            ValueError::InvalidPromotion(..) => "invalid-promotion",
            ValueError::Domain(..) => "semiring-domain-violation",
            ValueError::DenseKey(_) => "dense-key-violation",
        }
    }
}

/// One row of the scalar semiring table.
#[derive(Debug, Clone)]
pub struct ScalarSemiring {
    pub kind: ScalarType,
    pub add: fn(&Value, &Value) -> Value,
    pub mul: fn(&Value, &Value) -> Value,
    pub zero: Value,
    pub one: Value,
}

pub fn tagged_zero(k: TaggedKind) -> f64 {
    match k {
        TaggedKind::MinProd | TaggedKind::MinSum => f64::INFINITY,
        TaggedKind::MaxProd => 0.0,
        TaggedKind::MaxSum | TaggedKind::MaxMin => f64::NEG_INFINITY,
    }
}

pub fn tagged_one(k: TaggedKind) -> f64 {
    match k {
        TaggedKind::MinProd | TaggedKind::MaxProd => 1.0,
        TaggedKind::MinSum | TaggedKind::MaxSum => 0.0,
        TaggedKind::MaxMin => f64::INFINITY,
    }
}

pub fn tagged_add(k: TaggedKind, a: f64, b: f64) -> f64 {
    match k {
        TaggedKind::MinProd | TaggedKind::MinSum => a.min(b),
        TaggedKind::MaxProd | TaggedKind::MaxSum | TaggedKind::MaxMin => a.max(b),
    }
}

pub fn tagged_mul(k: TaggedKind, a: f64, b: f64) -> f64 {
    match k {
        TaggedKind::MinProd | TaggedKind::MaxProd => a * b,
        TaggedKind::MinSum | TaggedKind::MaxSum => a + b,
        TaggedKind::MaxMin => a.min(b),
    }
}

fn scalar_add_unchecked(a: &Value, b: &Value) -> Value {
    add_scalars(a, b).expect("scalar semiring operands of one kind")
}

fn scalar_mul_unchecked(a: &Value, b: &Value) -> Value {
    mul_scalars(a, b).expect("scalar semiring operands of one kind")
}

/// The semiring structure on a scalar type; `None` for `string`.
pub fn scalar_semiring(kind: ScalarType) -> Option<ScalarSemiring> {
    Some(ScalarSemiring {
        kind,
        add: scalar_add_unchecked,
        mul: scalar_mul_unchecked,
        zero: scalar_zero(kind)?,
        one: one_of(kind)?,
    })
}

fn scalar_zero(kind: ScalarType) -> Option<Value> {
    Some(match kind {
        ScalarType::Bool => Value::Bool(false),
        ScalarType::Int => Value::Int(0),
        ScalarType::Nat => Value::Nat(0),
        ScalarType::Real => Value::Real(0.0),
        ScalarType::Tagged(k) => Value::Tagged(k, tagged_zero(k)),
        ScalarType::Str => return None,
    })
}

/// Multiplicative identity; defined for semiring scalars only.
pub fn one_of(kind: ScalarType) -> Option<Value> {
    Some(match kind {
        ScalarType::Bool => Value::Bool(true),
        ScalarType::Int => Value::Int(1),
        ScalarType::Nat => Value::Nat(1),
        ScalarType::Real => Value::Real(1.0),
        ScalarType::Tagged(k) => Value::Tagged(k, tagged_one(k)),
        ScalarType::Str => return None,
    })
}

/// Additive identity of a type, in canonical form.
pub fn zero_of(t: &Type) -> Result<Value, ValueError> {
    match t {
        Type::Scalar(s) => scalar_zero(*s).ok_or_else(|| ValueError::NoSemiring(t.to_string())),
        Type::Record(fs) => Ok(Value::Record(Arc::new(
            fs.iter()
                .map(|(n, t)| Ok((n.clone(), zero_of(t)?)))
                .collect::<Result<Vec<_>, _>>()?,
        ))),
        Type::Dict { val, layout, .. } => {
            if !val.is_semiring() {
                return Err(ValueError::NoSemiring(t.to_string()));
            }
            Ok(match layout {
                crate::types::Layout::Hash => Value::empty_dict(),
                crate::types::Layout::Dense => Value::array(Vec::new()),
            })
        }
    }
}

/// Zero of the type of `v`, read off its shape. Fails on strings.
pub fn zero_like(v: &Value) -> Result<Value, ValueError> {
    match v {
        Value::Str(_) => Err(ValueError::NoSemiring(v.to_string())),
        Value::Record(fs) => Ok(Value::Record(Arc::new(
            fs.iter()
                .map(|(n, v)| Ok((n.clone(), zero_like(v)?)))
                .collect::<Result<Vec<_>, _>>()?,
        ))),
        Value::Dict(d) => Ok(match &**d {
            Dict::Hash(_) => Value::empty_dict(),
            Dict::Dense(_) => Value::array(Vec::new()),
        }),
        other => Ok(scalar_zero(other.scalar_type().expect("scalar")).expect("non-string")),
    }
}

fn add_scalars(a: &Value, b: &Value) -> Result<Value, ValueError> {
    use Value::*;
    Ok(match (a, b) {
        (Bool(x), Bool(y)) => Bool(*x || *y),
        (Int(x), Int(y)) => Int(x.wrapping_add(*y)),
        (Nat(x), Nat(y)) => Nat(x.wrapping_add(*y)),
        (Real(x), Real(y)) => Real(x + y),
        (Tagged(k1, x), Tagged(k2, y)) if k1 == k2 => Tagged(*k1, tagged_add(*k1, *x, *y)),
        (Str(_), _) | (_, Str(_)) => {
            return Err(ValueError::NoSemiring(alloc::format!("{a} + {b}")))
        }
        _ => return Err(mismatch(a, b)),
    })
}

fn mismatch(a: &Value, b: &Value) -> ValueError {
    ValueError::AddMismatch(a.to_string(), b.to_string())
}

/// Insert `v` at `k`, adding to an existing entry; zero results are removed.
pub fn insert_add(m: &mut BTreeMap<Value, Value>, k: Value, v: Value) -> Result<(), ValueError> {
    if let Value::Str(_) = v {
        return Err(ValueError::NoSemiring(v.to_string()));
    }
    match m.get_mut(&k) {
        Some(existing) => {
            add_assign(existing, v)?;
            if existing.is_zero() {
                m.remove(&k);
            }
        }
        None => {
            if !v.is_zero() {
                m.insert(k, v);
            }
        }
    }
    Ok(())
}

/// Point-wise addition. Both operands must have the same type.
pub fn add(a: &Value, b: &Value) -> Result<Value, ValueError> {
    let mut out = a.clone();
    add_assign(&mut out, b.clone())?;
    Ok(out)
}

/// In-place addition, reusing `acc`'s storage when it is not shared.
pub fn add_assign(acc: &mut Value, b: Value) -> Result<(), ValueError> {
    match (&mut *acc, b) {
        (Value::Record(x), Value::Record(y)) => {
            if x.len() != y.len() || x.iter().zip(y.iter()).any(|((n1, _), (n2, _))| n1 != n2) {
                return Err(ValueError::AddMismatch(
                    Value::Record(x.clone()).to_string(),
                    Value::Record(y).to_string(),
                ));
            }
            let xs = Arc::make_mut(x);
            for ((_, xv), (_, yv)) in xs.iter_mut().zip(y.iter()) {
                add_assign(xv, yv.clone())?;
            }
            Ok(())
        }
        (Value::Dict(x), Value::Dict(y)) => {
            if y.is_empty() && matches!((&**x, &*y), (Dict::Hash(_), Dict::Hash(_)) | (Dict::Dense(_), Dict::Dense(_))) {
                return Ok(());
            }
            if x.is_empty() && core::mem::discriminant(&**x) == core::mem::discriminant(&*y) {
                *x = y;
                return Ok(());
            }
            match (Arc::make_mut(x), &*y) {
                (Dict::Hash(m), Dict::Hash(n)) => {
                    for (k, v) in n {
                        insert_add(m, k.clone(), v.clone())?;
                    }
                    Ok(())
                }
                (Dict::Dense(xs), Dict::Dense(ys)) => {
                    for (i, v) in ys.iter().enumerate() {
                        if i < xs.len() {
                            add_assign(&mut xs[i], v.clone())?;
                        } else {
                            xs.push(v.clone());
                        }
                    }
                    Ok(())
                }
                (xd, _) => Err(ValueError::AddMismatch(
                    Value::Dict(Arc::new(xd.clone())).to_string(),
                    Value::Dict(y.clone()).to_string(),
                )),
            }
        }
        (a, b) => {
            *a = add_scalars(a, &b)?;
            Ok(())
        }
    }
}

fn promote_pair(a: &Value, b: &Value) -> Option<(Value, Value)> {
    let (sa, sb) = (a.scalar_type()?, b.scalar_type()?);
    let j = sa.join(sb)?;
    Some((promote_value(a, j).ok()?, promote_value(b, j).ok()?))
}

fn mul_scalars(a: &Value, b: &Value) -> Result<Value, ValueError> {
    use Value::*;
    Ok(match (a, b) {
        (Bool(x), Bool(y)) => Bool(*x && *y),
        (Int(x), Int(y)) => Int(x.wrapping_mul(*y)),
        (Nat(x), Nat(y)) => Nat(x.wrapping_mul(*y)),
        (Real(x), Real(y)) => Real(x * y),
        (Tagged(k1, x), Tagged(k2, y)) if k1 == k2 => Tagged(*k1, tagged_mul(*k1, *x, *y)),
        _ => match promote_pair(a, b) {
            Some((pa, pb)) if pa.scalar_type() != a.scalar_type() || pb.scalar_type() != b.scalar_type() => {
                return mul_scalars(&pa, &pb)
            }
            _ => return Err(ValueError::MulUndefined(a.to_string(), b.to_string())),
        },
    })
}

/// Generalized multiplication (outer product on dictionaries and records).
pub fn mul(a: &Value, b: &Value) -> Result<Value, ValueError> {
    let mut n = 0;
    mul_counted(a, b, &mut n)
}

/// As [`mul`], incrementing `scalar_mults` once per scalar product.
pub fn mul_counted(a: &Value, b: &Value, scalar_mults: &mut u64) -> Result<Value, ValueError> {
    if let Value::Str(_) = a {
        return Err(ValueError::MulUndefined(a.to_string(), b.to_string()));
    }
    match a {
        Value::Dict(d) => map_dict(d, |v| mul_counted(v, b, scalar_mults)),
        Value::Record(fs) => map_record(fs, |v| mul_counted(v, b, scalar_mults)),
        _ => match b {
            Value::Dict(d) => map_dict(d, |v| mul_counted(a, v, scalar_mults)),
            Value::Record(fs) => map_record(fs, |v| mul_counted(a, v, scalar_mults)),
            Value::Str(_) => Err(ValueError::MulUndefined(a.to_string(), b.to_string())),
            _ => {
                *scalar_mults += 1;
                mul_scalars(a, b)
            }
        },
    }
}

fn map_dict(
    d: &Dict,
    mut f: impl FnMut(&Value) -> Result<Value, ValueError>,
) -> Result<Value, ValueError> {
    Ok(Value::Dict(Arc::new(match d {
        Dict::Hash(m) => {
            let mut out = BTreeMap::new();
            for (k, v) in m {
                let r = f(v)?;
                if !r.is_zero() {
                    out.insert(k.clone(), r);
                }
            }
            Dict::Hash(out)
        }
        Dict::Dense(xs) => Dict::Dense(xs.iter().map(f).collect::<Result<_, _>>()?),
    })))
}

fn map_record(
    fs: &[(crate::Name, Value)],
    mut f: impl FnMut(&Value) -> Result<Value, ValueError>,
) -> Result<Value, ValueError> {
    Ok(Value::Record(Arc::new(
        fs.iter()
            .map(|(n, v)| Ok((n.clone(), f(v)?)))
            .collect::<Result<Vec<_>, ValueError>>()?,
    )))
}

/// Promotion along `bool <: int <: real`.
pub fn promote_value(v: &Value, target: ScalarType) -> Result<Value, ValueError> {
    let invalid = || ValueError::InvalidPromotion(v.to_string(), target.name().to_string());
    let from = v.scalar_type().ok_or_else(invalid)?;
    if from == target {
        return Ok(v.clone());
    }
    if !from.is_subtype_of(target) {
        return Err(invalid());
    }
    Ok(match (v, target) {
        (Value::Bool(b), ScalarType::Int) => Value::Int(*b as i64),
        (Value::Bool(b), ScalarType::Real) => Value::Real(if *b { 1.0 } else { 0.0 }),
        (Value::Int(i), ScalarType::Real) => Value::Real(*i as f64),
        _ => return Err(invalid()),
    })
}

/// Dictionary lookup; an absent key yields the zero of `val_ty`.
pub fn lookup(d: &Value, k: &Value, val_ty: &Type) -> Result<Value, ValueError> {
    let dict = match d {
        Value::Dict(d) => d,
        _ => return Err(ValueError::MulUndefined(d.to_string(), "lookup".to_string())),
    };
    let hit = match &**dict {
        Dict::Hash(m) => m.get(&canonicalize(k)).cloned(),
        Dict::Dense(_) => dict.get(k).cloned(),
    };
    match hit {
        Some(v) => Ok(v),
        None => zero_of(val_ty),
    }
}

/// Convert a value's real (or int, for `nat`) leaves into a tagged semiring.
pub fn wrap_leaves(v: &Value, target: ScalarType) -> Result<Value, ValueError> {
    match v {
        Value::Real(x) => match target {
            ScalarType::Tagged(k) => {
                if k.in_domain(*x) {
                    Ok(Value::Tagged(k, *x))
                } else {
                    Err(ValueError::Domain(v.to_string(), k.type_name()))
                }
            }
            _ => Err(ValueError::InvalidPromotion(v.to_string(), target.name().to_string())),
        },
        Value::Int(i) if target == ScalarType::Nat => {
            if *i >= 0 {
                Ok(Value::Nat(*i as u64))
            } else {
                Err(ValueError::Domain(v.to_string(), "nat"))
            }
        }
        Value::Record(fs) => map_record(fs, |x| wrap_leaves(x, target)),
        Value::Dict(d) => map_dict(d, |x| wrap_leaves(x, target)),
        _ => Err(ValueError::InvalidPromotion(v.to_string(), target.name().to_string())),
    }
}

/// Inverse of [`wrap_leaves`]: tagged leaves become reals, nat leaves ints.
pub fn unwrap_leaves(v: &Value) -> Result<Value, ValueError> {
    match v {
        Value::Tagged(_, x) => Ok(Value::Real(*x)),
        Value::Nat(n) => Ok(Value::Int(*n as i64)),
        Value::Record(fs) => map_record(fs, unwrap_leaves),
        Value::Dict(d) => map_dict(d, unwrap_leaves),
        _ => Err(ValueError::InvalidPromotion(v.to_string(), "real".to_string())),
    }
}
