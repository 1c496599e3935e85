//! Relational algebra with set semantics. A relation `R(a1, ..., an)` is a
//! dictionary `{ <a1: A1, ..., an: An> -> bool }`; grouped aggregates
//! produce bags of `<key, val>` rows.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use super::agg::{lower_group_agg, lower_scalar_agg, AggKind};
use super::{binder, binder_with, FrontendError, RowFn};
use crate::syntax::{concat, empty, if_then, key_of, lookup, singleton, sum, var, Expr};
use crate::typecheck::{type_of, TypeEnv};
use crate::types::Type;
use crate::Name;

#[derive(Debug, Clone, PartialEq)]
pub enum Ra {
    /// A base relation, typed by the catalog.
    Scan(Name),
    Select(RowFn, Box<Ra>),
    Project(RowFn, Box<Ra>),
    Union(Box<Ra>, Box<Ra>),
    Intersect(Box<Ra>, Box<Ra>),
    Difference(Box<Ra>, Box<Ra>),
    Product(Box<Ra>, Box<Ra>),
    /// Theta join; the condition sees the concatenated row.
    Join(RowFn, Box<Ra>, Box<Ra>),
    /// `Γ_{g;f}`; without `keys` the result is a scalar, not a relation.
    GroupAgg {
        keys: Option<RowFn>,
        agg: AggKind,
        f: Option<RowFn>,
        input: Box<Ra>,
    },
}

impl Ra {
    pub fn scan(n: &str) -> Ra {
        Ra::Scan(n.into())
    }

    pub fn select(p: RowFn, q: Ra) -> Ra {
        Ra::Select(p, Box::new(q))
    }

    pub fn project(f: RowFn, q: Ra) -> Ra {
        Ra::Project(f, Box::new(q))
    }

    pub fn union(a: Ra, b: Ra) -> Ra {
        Ra::Union(Box::new(a), Box::new(b))
    }

    pub fn intersect(a: Ra, b: Ra) -> Ra {
        Ra::Intersect(Box::new(a), Box::new(b))
    }

    pub fn difference(a: Ra, b: Ra) -> Ra {
        Ra::Difference(Box::new(a), Box::new(b))
    }

    pub fn product(a: Ra, b: Ra) -> Ra {
        Ra::Product(Box::new(a), Box::new(b))
    }

    pub fn join(theta: RowFn, a: Ra, b: Ra) -> Ra {
        Ra::Join(theta, Box::new(a), Box::new(b))
    }
}

/// Row type and multiplicity type of a relation.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub row: Type,
    pub mult: Type,
}

impl Schema {
    pub fn dict_type(&self) -> Type {
        Type::dict(self.row.clone(), self.mult.clone())
    }
}

/// Lower a query; base relations are looked up in `catalog`.
pub fn lower_ra(q: &Ra, catalog: &TypeEnv) -> Result<Expr, FrontendError> {
    if let Ra::GroupAgg { keys: None, agg, f, input } = q {
        let (e, _) = lower(input, catalog)?;
        return lower_scalar_agg(catalog, e, *agg, f.as_ref());
    }
    Ok(lower(q, catalog)?.0)
}

pub fn ra_schema(q: &Ra, catalog: &TypeEnv) -> Result<Schema, FrontendError> {
    Ok(lower(q, catalog)?.1)
}

fn schema_of(t: Type, what: &str) -> Result<Schema, FrontendError> {
    match t {
        Type::Dict { key, val, .. } => Ok(Schema { row: *key, mult: *val }),
        t => Err(FrontendError::new("schema-mismatch", format!("{what} has type {t}, not a relation"))),
    }
}

/// Type of `f` applied to a row of type `row`.
fn apply_type(env: &TypeEnv, f: &RowFn, row: &Type) -> Result<Type, FrontendError> {
    Ok(type_of(&env.clone().with(f.var.clone(), row.clone()), &f.body)?)
}

fn require_bool(env: &TypeEnv, p: &RowFn, row: &Type) -> Result<(), FrontendError> {
    match apply_type(env, p, row)? {
        Type::Scalar(crate::ScalarType::Bool) => Ok(()),
        t => Err(FrontendError::new("type-mismatch", format!("predicate has type {t}, expected bool"))),
    }
}

fn set_of(row: Type) -> Schema {
    Schema { row, mult: Type::BOOL }
}

fn lower(q: &Ra, env: &TypeEnv) -> Result<(Expr, Schema), FrontendError> {
    match q {
        Ra::Scan(n) => {
            let t = env
                .get(n)
                .cloned()
                .ok_or_else(|| FrontendError::new("unknown-relation", format!("no relation named `{n}`")))?;
            Ok((var(n), schema_of(t, n)?))
        }
        Ra::Select(p, r) => {
            let (r, s) = lower(r, env)?;
            require_bool(env, p, &s.row)?;
            Ok((filter(r, p), set_of(s.row)))
        }
        Ra::Project(f, r) => {
            let (r, s) = lower(r, env)?;
            let row = apply_type(env, f, &s.row)?;
            let x = binder_with("x", &[&r], &[f]);
            Ok((sum(&x, r, singleton(f.apply(&key_of(&x)), crate::syntax::boolean(true))), set_of(row)))
        }
        Ra::Union(a, b) => {
            let (a, sa) = lower(a, env)?;
            let (b, sb) = lower(b, env)?;
            if sa != sb {
                return Err(FrontendError::new(
                    "schema-mismatch",
                    format!("union of {} and {}", sa.dict_type(), sb.dict_type()),
                ));
            }
            Ok((crate::syntax::add(a, b), sa))
        }
        Ra::Intersect(a, b) | Ra::Difference(a, b) => {
            let (a, sa) = lower(a, env)?;
            let (b, sb) = lower(b, env)?;
            if sa.row != sb.row || sb.mult != Type::BOOL {
                return Err(FrontendError::new(
                    "schema-mismatch",
                    format!("set operation on {} and {}", sa.dict_type(), sb.dict_type()),
                ));
            }
            let x = binder("x", &[&a, &b]);
            let hit = singleton(key_of(&x), crate::syntax::boolean(true));
            let cond = lookup(b, key_of(&x));
            let body = if matches!(q, Ra::Intersect(..)) {
                if_then(cond, hit, Some(empty(None)))
            } else {
                if_then(cond, empty(None), Some(hit))
            };
            Ok((sum(&x, a, body), set_of(sa.row)))
        }
        Ra::Product(a, b) => product(a, b, env),
        Ra::Join(theta, a, b) => {
            let (p, s) = product(a, b, env)?;
            require_bool(env, theta, &s.row)?;
            Ok((filter(p, theta), s))
        }
        Ra::GroupAgg { keys: Some(g), agg, f, input } => {
            let (r, _) = lower(input, env)?;
            let e = lower_group_agg(env, r, g, *agg, f.as_ref())?;
            let t = type_of(env, &e)?;
            Ok((e, schema_of(t, "aggregate")?))
        }
        Ra::GroupAgg { keys: None, .. } => Err(FrontendError::new(
            "schema-mismatch",
            "a scalar aggregate cannot be used as a relation",
        )),
    }
}

/// `sum(x <- r) if (p(x.key)) { x.key } else { }`.
fn filter(r: Expr, p: &RowFn) -> Expr {
    let x = binder_with("x", &[&r], &[p]);
    let body = if_then(
        p.apply(&key_of(&x)),
        singleton(key_of(&x), crate::syntax::boolean(true)),
        Some(empty(None)),
    );
    sum(&x, r, body)
}

fn product(a: &Ra, b: &Ra, env: &TypeEnv) -> Result<(Expr, Schema), FrontendError> {
    let (a, sa) = lower(a, env)?;
    let (b, sb) = lower(b, env)?;
    let (Type::Record(fa), Type::Record(fb)) = (&sa.row, &sb.row) else {
        return Err(FrontendError::new("schema-mismatch", "product needs record rows"));
    };
    let clash: Vec<&str> = fa.iter().filter(|(n, _)| fb.iter().any(|(m, _)| m == n)).map(|(n, _)| &**n).collect();
    if !clash.is_empty() {
        return Err(FrontendError::new("field-clash", format!("both sides have field(s) {}", clash.join(", "))));
    }
    let row = Type::Record(fa.iter().chain(fb.iter()).cloned().collect());
    let x = binder("x", &[&a, &b]);
    let y = binder("y", &[&a, &b, &var(&x)]);
    let body = singleton(concat(key_of(&x), key_of(&y)), crate::syntax::boolean(true));
    Ok((sum(&x, a, sum(&y, b, body)), set_of(row)))
}
