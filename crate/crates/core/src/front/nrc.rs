//! Positive nested relational calculus with bag semantics and the
//! `sumBy`/`groupBy` aggregates. Bags are dictionaries from elements to
//! integer multiplicities; elements may themselves contain bags.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use super::agg::{lower_group_agg, lower_scalar_agg, repack, AggKind};
use super::{binder, binder_with, FrontendError, RowFn};
use crate::syntax::{empty, if_then, int, key_of, let_in, mul, record, singleton, sum, val_of, var, Expr};
use crate::typecheck::{type_of, TypeEnv};
use crate::types::Type;
use crate::Name;

#[derive(Debug, Clone, PartialEq)]
pub enum Nrc {
    /// A scalar or record-valued SDQL term, including variables.
    Prim(Expr),
    Record(Vec<(Name, Nrc)>),
    Let(Name, Box<Nrc>, Box<Nrc>),
    /// `if c then e`; the else branch is the empty bag.
    If(Expr, Box<Nrc>),
    /// The empty bag of elements of the given type.
    Empty(Type),
    Sng(Box<Nrc>),
    Flatten(Box<Nrc>),
    /// `for x in e1 union e2`.
    ForUnion(Name, Box<Nrc>, Box<Nrc>),
    Union(Box<Nrc>, Box<Nrc>),
    Product(Box<Nrc>, Box<Nrc>),
    /// `sumBy_g^f`; without `keys` the result is a scalar.
    SumBy {
        keys: Option<RowFn>,
        value: RowFn,
        input: Box<Nrc>,
    },
    GroupBy {
        keys: RowFn,
        input: Box<Nrc>,
    },
}

impl Nrc {
    pub fn var(n: &str) -> Nrc {
        Nrc::Prim(var(n))
    }

    pub fn sng(e: Nrc) -> Nrc {
        Nrc::Sng(Box::new(e))
    }

    pub fn flatten(e: Nrc) -> Nrc {
        Nrc::Flatten(Box::new(e))
    }

    pub fn for_union(x: &str, e1: Nrc, e2: Nrc) -> Nrc {
        Nrc::ForUnion(x.into(), Box::new(e1), Box::new(e2))
    }

    pub fn union(a: Nrc, b: Nrc) -> Nrc {
        Nrc::Union(Box::new(a), Box::new(b))
    }

    pub fn product(a: Nrc, b: Nrc) -> Nrc {
        Nrc::Product(Box::new(a), Box::new(b))
    }

    pub fn if_then(c: Expr, e: Nrc) -> Nrc {
        Nrc::If(c, Box::new(e))
    }
}

/// Lower `q` in an environment typing its free variables.
pub fn lower_nrc(q: &Nrc, env: &TypeEnv) -> Result<Expr, FrontendError> {
    let e = lower(q, env)?;
    type_of(env, &e)?;
    Ok(e)
}

fn bag_elem(env: &TypeEnv, e: &Expr, what: &str) -> Result<Type, FrontendError> {
    match type_of(env, e)? {
        Type::Dict { key, .. } => Ok(*key),
        t => Err(FrontendError::new("type-mismatch", format!("{what} expects a bag, found {t}"))),
    }
}

fn lower(q: &Nrc, env: &TypeEnv) -> Result<Expr, FrontendError> {
    Ok(match q {
        Nrc::Prim(e) => e.clone(),
        Nrc::Record(fs) => record(fs.iter().map(|(n, f)| Ok((n.clone(), lower(f, env)?))).collect::<Result<Vec<_>, FrontendError>>()?),
        Nrc::Let(x, e1, e2) => {
            let a = lower(e1, env)?;
            let t = type_of(env, &a)?;
            let b = lower(e2, &env.clone().with(x.clone(), t))?;
            let_in(x, a, b)
        }
        Nrc::If(c, e) => if_then(c.clone(), lower(e, env)?, Some(empty(None))),
        Nrc::Empty(t) => empty(Some(Type::dict(t.clone(), Type::INT))),
        Nrc::Sng(e) => singleton(lower(e, env)?, int(1)),
        Nrc::Flatten(e) => {
            let a = lower(e, env)?;
            let x = binder("x", &[&a]);
            sum(&x, a, mul(val_of(&x), key_of(&x)))
        }
        Nrc::ForUnion(x, e1, e2) => {
            let a = lower(e1, env)?;
            let elem = bag_elem(env, &a, "for")?;
            let b = lower(e2, &env.clone().with(x.clone(), elem))?;
            let y = binder("y", &[&a, &b, &var(x)]);
            sum(&y, a, let_in(x, key_of(&y), mul(val_of(&y), b)))
        }
        Nrc::Union(a, b) => {
            let (a, b) = (lower(a, env)?, lower(b, env)?);
            let (ta, tb) = (type_of(env, &a)?, type_of(env, &b)?);
            if ta != tb {
                return Err(FrontendError::new("type-mismatch", format!("union of {ta} and {tb}")));
            }
            crate::syntax::add(a, b)
        }
        Nrc::Product(a, b) => {
            let (a, b) = (lower(a, env)?, lower(b, env)?);
            let x = binder("x", &[&a, &b]);
            let y = binder("y", &[&a, &b, &var(&x)]);
            let pair = record([("fst", key_of(&x)), ("snd", key_of(&y))]);
            sum(&x, a, sum(&y, b, singleton(pair, mul(val_of(&x), val_of(&y)))))
        }
        Nrc::SumBy { keys, value, input } => {
            let a = lower(input, env)?;
            match keys {
                Some(g) => lower_group_agg(env, a, g, AggKind::Sum, Some(value))?,
                None => lower_scalar_agg(env, a, AggKind::Sum, Some(value))?,
            }
        }
        Nrc::GroupBy { keys, input } => {
            let a = lower(input, env)?;
            let x = binder_with("x", &[&a], &[keys]);
            let tmp = binder_with("tmp", &[&a], &[keys]);
            let inner = singleton(key_of(&x), val_of(&x));
            let_in(&tmp, sum(&x, a, singleton(keys.apply(&key_of(&x)), inner)), repack(&x, &tmp))
        }
    })
}
