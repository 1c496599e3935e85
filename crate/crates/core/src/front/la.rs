//! Linear algebra over sparse tensors. Vectors are `{ int -> S }`; matrices
//! are either flat, `{ <row: int, col: int> -> S }`, or curried,
//! `{ int -> { int -> S } }`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use super::{binder, FrontendError};
use crate::syntax::{
    add, cmp, empty, field, if_then, key_of, let_in, lookup, mul, record, singleton, sum, val_of, var, zero_expr, CmpOp,
    Expr,
};
use crate::typecheck::{type_of, TypeEnv};
use crate::types::{ScalarType, Type};
use crate::Name;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaLayout {
    Flat,
    Curried,
}

impl fmt::Display for LaLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LaLayout::Flat => "flat",
            LaLayout::Curried => "curried",
        })
    }
}

impl core::str::FromStr for LaLayout {
    type Err = FrontendError;

    fn from_str(s: &str) -> Result<Self, FrontendError> {
        match s {
            "flat" => Ok(LaLayout::Flat),
            "curried" => Ok(LaLayout::Curried),
            _ => Err(FrontendError::new("layout-mismatch", format!("unknown matrix layout `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum La {
    /// A named vector, matrix or scalar, typed by the environment.
    Var(Name),
    /// A scalar SDQL term.
    Scalar(Expr),
    VecAdd(Box<La>, Box<La>),
    MatAdd(Box<La>, Box<La>),
    /// Scalar times vector or matrix.
    Scale(Box<La>, Box<La>),
    /// Element-wise product of two vectors or two matrices.
    Hadamard(Box<La>, Box<La>),
    Dot(Box<La>, Box<La>),
    /// Sum of the entries of a vector.
    VecSum(Box<La>),
    Transpose(Box<La>),
    MatMul(Box<La>, Box<La>),
    MatVec(Box<La>, Box<La>),
    Trace(Box<La>),
    /// Re-encode a matrix in the given layout.
    Convert(LaLayout, Box<La>),
}

impl La {
    pub fn var(n: &str) -> La {
        La::Var(n.into())
    }

    pub fn bin(op: fn(Box<La>, Box<La>) -> La, a: La, b: La) -> La {
        op(Box::new(a), Box::new(b))
    }

    pub fn un(op: fn(Box<La>) -> La, a: La) -> La {
        op(Box::new(a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Scalar(ScalarType),
    Vector(ScalarType),
    Matrix(LaLayout, ScalarType),
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Scalar(s) => write!(f, "scalar {}", s.name()),
            Shape::Vector(s) => write!(f, "vector of {}", s.name()),
            Shape::Matrix(l, s) => write!(f, "{l} matrix of {}", s.name()),
        }
    }
}

fn shape_of(t: &Type) -> Option<Shape> {
    let idx = |t: &Type| *t == Type::INT;
    match t {
        Type::Scalar(s) => Some(Shape::Scalar(*s)),
        Type::Dict { key, val, .. } => match (&**key, &**val) {
            (k, Type::Scalar(s)) if idx(k) => Some(Shape::Vector(*s)),
            (Type::Record(fs), Type::Scalar(s))
                if fs.len() == 2 && &*fs[0].0 == "row" && &*fs[1].0 == "col" && idx(&fs[0].1) && idx(&fs[1].1) =>
            {
                Some(Shape::Matrix(LaLayout::Flat, *s))
            }
            (k, Type::Dict { key: k2, val: v2, .. }) if idx(k) && idx(k2) => match &**v2 {
                Type::Scalar(s) => Some(Shape::Matrix(LaLayout::Curried, *s)),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

fn join(a: ScalarType, b: ScalarType) -> Result<ScalarType, FrontendError> {
    a.join(b)
        .ok_or_else(|| FrontendError::new("type-mismatch", format!("cannot combine {} and {}", a.name(), b.name())))
}

fn rc(row: Expr, col: Expr) -> Expr {
    record([("row", row), ("col", col)])
}

/// Lower `q` with all matrices in `mode`. Operands that are not variables
/// are bound with `let` so they are computed once.
pub fn lower_la(q: &La, mode: LaLayout, env: &TypeEnv) -> Result<Expr, FrontendError> {
    let mut cx = Lower { mode, env, lets: Vec::new() };
    let (e, _) = cx.lower(q)?;
    let e = cx.lets.into_iter().rev().fold(e, |body, (n, v)| let_in(&n, v, body));
    type_of(env, &e)?;
    Ok(e)
}

struct Lower<'a> {
    mode: LaLayout,
    env: &'a TypeEnv,
    lets: Vec<(Name, Expr)>,
}

impl Lower<'_> {
    /// Lower an operand and, unless it is a variable, bind it to a fresh
    /// name; returns a reference to the operand.
    fn operand(&mut self, q: &La) -> Result<(Expr, Shape), FrontendError> {
        let (e, sh) = self.lower(q)?;
        if matches!(e, Expr::Var(_)) || matches!(sh, Shape::Scalar(_)) {
            return Ok((e, sh));
        }
        let base = if matches!(sh, Shape::Vector(_)) { "Vt" } else { "Mt" };
        let mut avoid = alloc::collections::BTreeSet::new();
        for (n, v) in &self.lets {
            avoid.insert(n.clone());
            crate::syntax::all_names(v, &mut avoid);
        }
        crate::syntax::all_names(&e, &mut avoid);
        avoid.extend(self.env.names().cloned());
        let n = crate::syntax::fresh(base, &avoid);
        self.lets.push((n.clone(), e));
        Ok((var(&n), sh))
    }

    fn matrix(&mut self, q: &La) -> Result<(Expr, ScalarType), FrontendError> {
        match self.operand(q)? {
            (e, Shape::Matrix(l, s)) if l == self.mode => Ok((e, s)),
            (_, Shape::Matrix(l, _)) => Err(FrontendError::new(
                "layout-mismatch",
                format!("{l} matrix used in {} mode without a conversion", self.mode),
            )),
            (_, sh) => Err(FrontendError::new("type-mismatch", format!("expected a matrix, found {sh}"))),
        }
    }

    fn vector(&mut self, q: &La) -> Result<(Expr, ScalarType), FrontendError> {
        match self.operand(q)? {
            (e, Shape::Vector(s)) => Ok((e, s)),
            (_, sh) => Err(FrontendError::new("type-mismatch", format!("expected a vector, found {sh}"))),
        }
    }

    fn lower(&mut self, q: &La) -> Result<(Expr, Shape), FrontendError> {
        let flat = self.mode == LaLayout::Flat;
        Ok(match q {
            La::Var(n) => {
                let t = self
                    .env
                    .get(n)
                    .ok_or_else(|| FrontendError::new("type-mismatch", format!("`{n}` is not bound")))?;
                let sh = shape_of(t)
                    .ok_or_else(|| FrontendError::new("type-mismatch", format!("`{n}` has type {t}, not a tensor")))?;
                (var(n), sh)
            }
            La::Scalar(e) => match type_of(self.env, e)? {
                Type::Scalar(s) => (e.clone(), Shape::Scalar(s)),
                t => return Err(FrontendError::new("type-mismatch", format!("expected a scalar, found {t}"))),
            },
            La::VecAdd(a, b) => {
                let ((a, s1), (b, s2)) = (self.vector(a)?, self.vector(b)?);
                (add(a, b), Shape::Vector(join(s1, s2)?))
            }
            La::MatAdd(a, b) => {
                let ((a, s1), (b, s2)) = (self.matrix(a)?, self.matrix(b)?);
                (add(a, b), Shape::Matrix(self.mode, join(s1, s2)?))
            }
            La::Scale(a, t) => {
                let (a, sa) = self.lower(a)?;
                let Shape::Scalar(sa) = sa else {
                    return Err(FrontendError::new("type-mismatch", format!("scale factor is a {sa}")));
                };
                let (t, st) = self.operand(t)?;
                let sh = match st {
                    Shape::Vector(s) => Shape::Vector(join(sa, s)?),
                    Shape::Matrix(l, s) if l == self.mode => Shape::Matrix(l, join(sa, s)?),
                    other => return Err(FrontendError::new("type-mismatch", format!("cannot scale a {other}"))),
                };
                (mul(a, t), sh)
            }
            La::Hadamard(a, b) => match self.lower_peek(a)? {
                Shape::Vector(_) => {
                    let ((a, s1), (b, s2)) = (self.vector(a)?, self.vector(b)?);
                    (elementwise(a, b), Shape::Vector(join(s1, s2)?))
                }
                _ => {
                    let ((a, s1), (b, s2)) = (self.matrix(a)?, self.matrix(b)?);
                    let e = if flat { elementwise(a, b) } else { curried_hadamard(a, b) };
                    (e, Shape::Matrix(self.mode, join(s1, s2)?))
                }
            },
            La::Dot(a, b) => {
                let ((a, s1), (b, s2)) = (self.vector(a)?, self.vector(b)?);
                let x = binder("x", &[&a, &b]);
                (sum(&x, a, mul(val_of(&x), lookup(b, key_of(&x)))), Shape::Scalar(join(s1, s2)?))
            }
            La::VecSum(v) => {
                let (v, s) = self.vector(v)?;
                let x = binder("x", &[&v]);
                (sum(&x, v, val_of(&x)), Shape::Scalar(s))
            }
            La::Transpose(m) => {
                let (m, s) = self.matrix(m)?;
                (if flat { flat_transpose(m) } else { curried_transpose(m) }, Shape::Matrix(self.mode, s))
            }
            La::MatMul(a, b) => {
                let ((a, s1), (b, s2)) = (self.matrix(a)?, self.matrix(b)?);
                let e = if flat { flat_matmul(a, b) } else { curried_matmul(a, b) };
                (e, Shape::Matrix(self.mode, join(s1, s2)?))
            }
            La::MatVec(m, v) => {
                let ((m, s1), (v, s2)) = (self.matrix(m)?, self.vector(v)?);
                let e = if flat {
                    let x = binder("x", &[&m, &v]);
                    sum(&x, m, singleton(field(key_of(&x), "row"), mul(val_of(&x), lookup(v, field(key_of(&x), "col")))))
                } else {
                    let row = binder("row", &[&m, &v]);
                    let x = binder("x", &[&m, &v, &var(&row)]);
                    let inner = sum(&x, val_of(&row), mul(val_of(&x), lookup(v, key_of(&x))));
                    sum(&row, m, singleton(key_of(&row), inner))
                };
                (e, Shape::Vector(join(s1, s2)?))
            }
            La::Trace(m) => {
                let (m, s) = self.matrix(m)?;
                let e = if flat {
                    let x = binder("x", &[&m]);
                    let diag = cmp(CmpOp::Eq, field(key_of(&x), "row"), field(key_of(&x), "col"));
                    sum(&x, m, if_then(diag, val_of(&x), zero_expr(&Type::Scalar(s))))
                } else {
                    let row = binder("row", &[&m]);
                    sum(&row, m, lookup(val_of(&row), key_of(&row)))
                };
                (e, Shape::Scalar(s))
            }
            La::Convert(target, m) => {
                let (m, sh) = self.lower(m)?;
                match sh {
                    Shape::Matrix(l, s) if l == *target => (m, Shape::Matrix(l, s)),
                    Shape::Matrix(LaLayout::Flat, s) => (flat_to_curried(m), Shape::Matrix(LaLayout::Curried, s)),
                    Shape::Matrix(LaLayout::Curried, s) => (curried_to_flat(m), Shape::Matrix(LaLayout::Flat, s)),
                    other => return Err(FrontendError::new("type-mismatch", format!("cannot convert a {other}"))),
                }
            }
        })
    }

    /// Shape of `q` without recording any bindings.
    fn lower_peek(&mut self, q: &La) -> Result<Shape, FrontendError> {
        let saved = self.lets.len();
        let r = self.lower(q).map(|(_, sh)| sh);
        self.lets.truncate(saved);
        r
    }
}

/// `sum(x in a) { x.key -> x.val * b(x.key) }`.
fn elementwise(a: Expr, b: Expr) -> Expr {
    let x = binder("x", &[&a, &b]);
    sum(&x, a, singleton(key_of(&x), mul(val_of(&x), lookup(b, key_of(&x)))))
}

fn curried_hadamard(a: Expr, b: Expr) -> Expr {
    let row = binder("row", &[&a, &b]);
    let x = binder("x", &[&a, &b, &var(&row)]);
    let v = mul(val_of(&x), lookup(lookup(b, key_of(&row)), key_of(&x)));
    sum(&row, a, singleton(key_of(&row), sum(&x, val_of(&row), singleton(key_of(&x), v))))
}

fn flat_transpose(m: Expr) -> Expr {
    let x = binder("x", &[&m]);
    sum(&x, m, singleton(rc(field(key_of(&x), "col"), field(key_of(&x), "row")), val_of(&x)))
}

fn curried_transpose(m: Expr) -> Expr {
    let row = binder("row", &[&m]);
    let x = binder("x", &[&m, &var(&row)]);
    sum(&row, m, sum(&x, val_of(&row), singleton(key_of(&x), singleton(key_of(&row), val_of(&x)))))
}

fn flat_matmul(a: Expr, b: Expr) -> Expr {
    let x = binder("x", &[&a, &b]);
    let y = binder("y", &[&a, &b, &var(&x)]);
    let hit = cmp(CmpOp::Eq, field(key_of(&x), "col"), field(key_of(&y), "row"));
    let entry = singleton(rc(field(key_of(&x), "row"), field(key_of(&y), "col")), mul(val_of(&x), val_of(&y)));
    sum(&x, a, sum(&y, b, if_then(hit, entry, Some(empty(None)))))
}

fn curried_matmul(a: Expr, b: Expr) -> Expr {
    let row = binder("row", &[&a, &b]);
    let x = binder("x", &[&a, &b, &var(&row)]);
    let y = binder("y", &[&a, &b, &var(&row), &var(&x)]);
    let inner = sum(&x, val_of(&row), sum(&y, lookup(b, key_of(&x)), singleton(key_of(&y), mul(val_of(&x), val_of(&y)))));
    sum(&row, a, singleton(key_of(&row), inner))
}

/// `sum(x in M) { x.key.row -> { x.key.col -> x.val } }`.
fn flat_to_curried(m: Expr) -> Expr {
    let x = binder("x", &[&m]);
    sum(&x, m, singleton(field(key_of(&x), "row"), singleton(field(key_of(&x), "col"), val_of(&x))))
}

/// `sum(row in M) sum(x in row.val) { <row=row.key, col=x.key> -> x.val }`.
fn curried_to_flat(m: Expr) -> Expr {
    let row = binder("row", &[&m]);
    let x = binder("x", &[&m, &var(&row)]);
    sum(&row, m, sum(&x, val_of(&row), singleton(rc(key_of(&row), key_of(&x)), val_of(&x))))
}
