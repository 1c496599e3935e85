//! Types of the language: scalar kinds, records, and dictionaries.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::Name;

/// The non-standard scalar semirings, each carried as an `f64` payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaggedKind {
    MinProd,
    MaxProd,
    MinSum,
    MaxSum,
    MaxMin,
}

impl TaggedKind {
    pub const ALL: [TaggedKind; 5] = [
        TaggedKind::MinProd,
        TaggedKind::MaxProd,
        TaggedKind::MinSum,
        TaggedKind::MaxSum,
        TaggedKind::MaxMin,
    ];

    /// Type keyword, e.g. `min_sum`.
    pub fn type_name(self) -> &'static str {
        match self {
            TaggedKind::MinProd => "min_prod",
            TaggedKind::MaxProd => "max_prod",
            TaggedKind::MinSum => "min_sum",
            TaggedKind::MaxSum => "max_sum",
            TaggedKind::MaxMin => "max_min",
        }
    }

    /// Suffix used by the `to_*` / `from_*` conversion primitives, e.g. `minsum`.
    pub fn fn_suffix(self) -> &'static str {
        match self {
            TaggedKind::MinProd => "minprod",
            TaggedKind::MaxProd => "maxprod",
            TaggedKind::MinSum => "minsum",
            TaggedKind::MaxSum => "maxsum",
            TaggedKind::MaxMin => "maxmin",
        }
    }

    pub fn from_type_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.type_name() == s)
    }

    pub fn from_fn_suffix(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.fn_suffix() == s)
    }

    /// Whether `x` lies in the carrier set of this semiring.
    pub fn in_domain(self, x: f64) -> bool {
        if x.is_nan() {
            return false;
        }
        match self {
            TaggedKind::MinProd => x > 0.0,
            TaggedKind::MaxProd => x >= 0.0 && x != f64::INFINITY,
            TaggedKind::MinSum => x != f64::NEG_INFINITY,
            TaggedKind::MaxSum => x != f64::INFINITY,
            TaggedKind::MaxMin => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScalarType {
    Bool,
    Int,
    Real,
    Str,
    Nat,
    Tagged(TaggedKind),
}

impl ScalarType {
    /// Position in the `bool <: int <: real` chain, if the type is on it.
    pub fn lattice_rank(self) -> Option<u8> {
        match self {
            ScalarType::Bool => Some(0),
            ScalarType::Int => Some(1),
            ScalarType::Real => Some(2),
            _ => None,
        }
    }

    pub fn is_subtype_of(self, other: ScalarType) -> bool {
        if self == other {
            return true;
        }
        matches!((self.lattice_rank(), other.lattice_rank()), (Some(a), Some(b)) if a <= b)
    }

    /// Least upper bound under `bool <: int <: real`.
    pub fn join(self, other: ScalarType) -> Option<ScalarType> {
        if self == other {
            return Some(self);
        }
        match (self.lattice_rank(), other.lattice_rank()) {
            (Some(a), Some(b)) => Some(if a >= b { self } else { other }),
            _ => None,
        }
    }

    pub fn has_semiring(self) -> bool {
        self != ScalarType::Str
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarType::Bool => "bool",
            ScalarType::Int => "int",
            ScalarType::Real => "real",
            ScalarType::Str => "string",
            ScalarType::Nat => "nat",
            ScalarType::Tagged(k) => k.type_name(),
        }
    }
}

/// Physical layout of a dictionary type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Layout {
    /// Sparse map; zero-valued entries are implicit.
    #[default]
    Hash,
    /// Positional array with keys exactly `0..n`.
    Dense,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Scalar(ScalarType),
    Record(Vec<(Name, Type)>),
    Dict {
        key: Box<Type>,
        val: Box<Type>,
        layout: Layout,
    },
}

impl Type {
    pub const BOOL: Type = Type::Scalar(ScalarType::Bool);
    pub const INT: Type = Type::Scalar(ScalarType::Int);
    pub const REAL: Type = Type::Scalar(ScalarType::Real);
    pub const STRING: Type = Type::Scalar(ScalarType::Str);

    pub fn dict(key: Type, val: Type) -> Type {
        Type::Dict {
            key: Box::new(key),
            val: Box::new(val),
            layout: Layout::Hash,
        }
    }

    /// `[| T |]`, a dense array of `T`.
    pub fn array(val: Type) -> Type {
        Type::Dict {
            key: Box::new(Type::INT),
            val: Box::new(val),
            layout: Layout::Dense,
        }
    }

    /// `{ T }`, a set of `T`.
    pub fn set(elem: Type) -> Type {
        Type::dict(elem, Type::BOOL)
    }

    pub fn record<I, S>(fields: I) -> Type
    where
        I: IntoIterator<Item = (S, Type)>,
        S: Into<Name>,
    {
        Type::Record(fields.into_iter().map(|(n, t)| (n.into(), t)).collect())
    }

    pub fn as_scalar(&self) -> Option<ScalarType> {
        match self {
            Type::Scalar(s) => Some(*s),
            _ => None,
        }
    }

    pub fn field(&self, name: &str) -> Option<&Type> {
        match self {
            Type::Record(fs) => fs.iter().find(|(n, _)| &**n == name).map(|(_, t)| t),
            _ => None,
        }
    }

    /// Whether every value position of this type carries a semiring,
    /// i.e. `zero_of` is defined. Dictionary keys are exempt.
    pub fn is_semiring(&self) -> bool {
        match self {
            Type::Scalar(s) => s.has_semiring(),
            Type::Record(fs) => fs.iter().all(|(_, t)| t.is_semiring()),
            Type::Dict { val, .. } => val.is_semiring(),
        }
    }

    /// Scalar types reachable in value positions (not inside keys).
    pub fn value_leaves(&self, out: &mut Vec<ScalarType>) {
        match self {
            Type::Scalar(s) => {
                if !out.contains(s) {
                    out.push(*s)
                }
            }
            Type::Record(fs) => fs.iter().for_each(|(_, t)| t.value_leaves(out)),
            Type::Dict { val, .. } => val.value_leaves(out),
        }
    }

    /// Replace every value-position scalar via `f`; `None` aborts.
    pub fn map_leaves(&self, f: &impl Fn(ScalarType) -> Option<ScalarType>) -> Option<Type> {
        Some(match self {
            Type::Scalar(s) => Type::Scalar(f(*s)?),
            Type::Record(fs) => Type::Record(
                fs.iter()
                    .map(|(n, t)| Some((n.clone(), t.map_leaves(f)?)))
                    .collect::<Option<Vec<_>>>()?,
            ),
            Type::Dict { key, val, layout } => Type::Dict {
                key: key.clone(),
                val: Box::new(val.map_leaves(f)?),
                layout: *layout,
            },
        })
    }
}

/// `T1 ⊗ T2`: the result type of multiplication, if defined.
///
/// Scalars of distinct kinds meet at their join on `bool <: int <: real`.
/// A scalar on the left distributes into dictionary values and record fields;
/// otherwise the left operand's structure is kept and its leaves are multiplied
/// by the whole right operand.
pub fn tensor_type(t1: &Type, t2: &Type) -> Option<Type> {
    match (t1, t2) {
        (Type::Scalar(a), Type::Scalar(b)) => {
            if !a.has_semiring() || !b.has_semiring() {
                return None;
            }
            a.join(*b).map(Type::Scalar)
        }
        (Type::Scalar(s), Type::Dict { key, val, layout }) => {
            if !s.has_semiring() {
                return None;
            }
            Some(Type::Dict {
                key: key.clone(),
                val: Box::new(tensor_type(t1, val)?),
                layout: *layout,
            })
        }
        (Type::Scalar(s), Type::Record(fs)) => {
            if !s.has_semiring() {
                return None;
            }
            Some(Type::Record(
                fs.iter()
                    .map(|(n, t)| Some((n.clone(), tensor_type(t1, t)?)))
                    .collect::<Option<Vec<_>>>()?,
            ))
        }
        (Type::Dict { key, val, layout }, _) => Some(Type::Dict {
            key: key.clone(),
            val: Box::new(tensor_type(val, t2)?),
            layout: *layout,
        }),
        (Type::Record(fs), _) => Some(Type::Record(
            fs.iter()
                .map(|(n, t)| Some((n.clone(), tensor_type(t, t2)?)))
                .collect::<Option<Vec<_>>>()?,
        )),
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Scalar(s) => write!(f, "{s}"),
            Type::Record(fs) => {
                f.write_str("<")?;
                for (i, (n, t)) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}: {t}")?;
                }
                f.write_str(">")
            }
            Type::Dict {
                key,
                val,
                layout: Layout::Hash,
            } => write!(f, "{{ {key} -> {val} }}"),
            Type::Dict {
                val,
                layout: Layout::Dense,
                ..
            } => write!(f, "[| {val} |]"),
        }
    }
}

/// Render a type to an owned string.
pub fn type_to_string(t: &Type) -> String {
    alloc::format!("{t}")
}
