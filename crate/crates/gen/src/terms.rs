//! Type-directed generation of closed, well-typed terms.
//!
//! Terms range over a small universe of types so that binders, lookups and
//! projections line up often enough to be interesting. Division is never
//! generated, and tagged sums only run over non-empty literal sources, so
//! evaluation cannot fail at runtime.

use rand::seq::SliceRandom;
use rand::Rng;
use sdql_core::syntax::{expr_of_value, CmpOp, Expr};
use sdql_core::{Layout, Name, ScalarType, TaggedKind, Type, Value};

use crate::values::value_of_type;

#[derive(Debug, Clone, Copy)]
pub struct TermConfig {
    /// Largest accepted term, counted in AST nodes.
    pub max_size: usize,
    pub max_depth: u32,
}

impl Default for TermConfig {
    fn default() -> Self {
        TermConfig { max_size: 40, max_depth: 4 }
    }
}

fn b<T>(x: T) -> Box<T> {
    Box::new(x)
}

fn key_rec() -> Type {
    Type::record([("a", Type::INT), ("b", Type::STRING)])
}

fn pair() -> Type {
    Type::record([("a", Type::INT), ("b", Type::REAL)])
}

/// Dictionary types terms may iterate over or look into.
fn dict_types() -> Vec<Type> {
    vec![
        Type::dict(Type::INT, Type::INT),
        Type::dict(Type::STRING, Type::REAL),
        Type::dict(Type::INT, Type::dict(Type::STRING, Type::INT)),
        Type::dict(key_rec(), Type::INT),
        Type::dict(Type::INT, Type::BOOL),
    ]
}

/// Result types of generated terms.
fn result_types() -> Vec<Type> {
    let mut out = vec![Type::INT, Type::REAL, Type::BOOL, pair()];
    out.extend(dict_types());
    out
}

fn leaf_scalar(t: &Type) -> Option<ScalarType> {
    let mut ls = Vec::new();
    t.value_leaves(&mut ls);
    match ls.as_slice() {
        [first, rest @ ..] if rest.iter().all(|s| s == first) => Some(*first),
        _ => None,
    }
}

struct Cx<'a, R: Rng> {
    rng: &'a mut R,
    scope: Vec<(Name, Type)>,
    next: usize,
}

impl<R: Rng> Cx<'_, R> {
    fn fresh(&mut self) -> Name {
        self.next += 1;
        format!("x{}", self.next).into()
    }

    /// Variables and field paths in scope whose type is `t`.
    fn paths(&self, t: &Type) -> Vec<Expr> {
        fn walk(e: Expr, ty: &Type, t: &Type, depth: u32, out: &mut Vec<Expr>) {
            if ty == t {
                out.push(e.clone());
            }
            if let (Type::Record(fs), true) = (ty, depth > 0) {
                for (n, ft) in fs {
                    walk(Expr::Field(b(e.clone()), n.clone()), ft, t, depth - 1, out);
                }
            }
        }
        let mut out = Vec::new();
        for (n, ty) in &self.scope {
            walk(Expr::Var(n.clone()), ty, t, 2, &mut out);
        }
        out
    }

    fn literal(&mut self, t: &Type) -> Expr {
        let v = match t {
            Type::Scalar(ScalarType::Int) => Value::Int(self.rng.gen_range(-3..=5)),
            Type::Scalar(ScalarType::Real) => Value::Real(self.rng.gen_range(-6..=6) as f64 / 2.0),
            _ => small_value(self.rng, t),
        };
        expr_of_value(&v, t)
    }

    fn leaf(&mut self, t: &Type) -> Expr {
        let ps = self.paths(t);
        if !ps.is_empty() && self.rng.gen_ratio(2, 3) {
            return ps.choose(self.rng).unwrap().clone();
        }
        self.literal(t)
    }

    fn term(&mut self, t: &Type, depth: u32) -> Expr {
        if depth == 0 || self.rng.gen_ratio(1, 5) {
            return self.leaf(t);
        }
        let d = depth - 1;
        let semiring = t.is_semiring();
        loop {
            let pick = self.rng.gen_range(0..12);
            return match pick {
                0 => {
                    let t1 = result_types().choose(self.rng).unwrap().clone();
                    let e1 = self.term(&t1, d);
                    let x = self.fresh();
                    self.scope.push((x.clone(), t1));
                    let body = self.term(t, d);
                    self.scope.pop();
                    Expr::Let(x, b(e1), b(body))
                }
                1 => {
                    let c = self.term(&Type::BOOL, d);
                    let th = self.term(t, d);
                    let el = if semiring && self.rng.gen() { None } else { Some(b(self.term(t, d))) };
                    Expr::If(b(c), b(th), el)
                }
                2 | 3 if semiring => self.sum(t, d),
                4 if semiring => Expr::Add(b(self.term(t, d)), b(self.term(t, d))),
                5 if semiring => self.product(t, d),
                6 if semiring => {
                    let k = [Type::INT, Type::STRING].choose(self.rng).unwrap().clone();
                    let dict = self.term(&Type::dict(k.clone(), t.clone()), d);
                    Expr::Lookup(b(dict), b(self.term(&k, d)))
                }
                7 => {
                    let r = Type::record([("a", t.clone()), ("b", Type::INT)]);
                    Expr::Field(b(self.term(&r, d)), "a".into())
                }
                _ => match self.shaped(t, d) {
                    Some(e) => e,
                    None => continue,
                },
            };
        }
    }

    /// Constructors specific to the shape of `t`.
    fn shaped(&mut self, t: &Type, d: u32) -> Option<Expr> {
        Some(match t {
            Type::Scalar(ScalarType::Bool) => match self.rng.gen_range(0..3) {
                0 => Expr::Not(b(self.term(t, d))),
                1 => {
                    let op = *[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le].choose(self.rng).unwrap();
                    Expr::Cmp(op, b(self.term(&Type::INT, d)), b(self.term(&Type::INT, d)))
                }
                _ => Expr::Cmp(CmpOp::Eq, b(self.term(&Type::STRING, d)), b(self.leaf(&Type::STRING))),
            },
            Type::Scalar(ScalarType::Int) => Expr::Promote(ScalarType::Bool, ScalarType::Int, b(self.term(&Type::BOOL, d))),
            Type::Scalar(ScalarType::Real) => {
                if self.rng.gen_ratio(1, 3) {
                    return Some(self.tagged_sum(d));
                }
                Expr::Promote(ScalarType::Int, ScalarType::Real, b(self.term(&Type::INT, d)))
            }
            Type::Record(fs) if fs.len() == 2 => {
                let (a, bf) = (&fs[0], &fs[1]);
                let ea = self.term(&a.1, d);
                let eb = self.term(&bf.1, d);
                if self.rng.gen() {
                    Expr::Concat(b(Expr::Record(vec![(a.0.clone(), ea)])), b(Expr::Record(vec![(bf.0.clone(), eb)])))
                } else {
                    Expr::Record(vec![(a.0.clone(), ea), (bf.0.clone(), eb)])
                }
            }
            Type::Record(fs) => Expr::Record(fs.iter().map(|(n, ft)| (n.clone(), self.term(ft, d))).collect()),
            Type::Dict { key, val, .. } => {
                if self.rng.gen_ratio(1, 4) {
                    Expr::EmptyDict(Some(t.clone()))
                } else {
                    let n = self.rng.gen_range(1..=2);
                    let entries = (0..n).map(|_| (self.term(key, d), self.term(val, d))).collect();
                    Expr::DictLit { entries, layout: Layout::Hash }
                }
            }
            _ => return None,
        })
    }

    fn sum(&mut self, t: &Type, d: u32) -> Expr {
        let src_t = dict_types().choose(self.rng).unwrap().clone();
        let Type::Dict { key, val, .. } = &src_t else { unreachable!() };
        let src = self.term(&src_t, d);
        let x = self.fresh();
        let row = Type::record([("key", (**key).clone()), ("val", (**val).clone())]);
        self.scope.push((x.clone(), row));
        let body = self.term(t, d);
        self.scope.pop();
        Expr::Sum { var: x, src: b(src), body: b(body), tag: None }
    }

    /// `sum<T>(x in { .. }) body` over a literal source with positive values,
    /// so the tagged fold never returns an infinite zero.
    fn tagged_sum(&mut self, d: u32) -> Expr {
        let tag = *[TaggedKind::MaxSum, TaggedKind::MinSum, TaggedKind::MaxMin].choose(self.rng).unwrap();
        let n = self.rng.gen_range(1..=3);
        let mut keys: Vec<i64> = (0..4).collect();
        keys.shuffle(self.rng);
        let entries = keys[..n]
            .iter()
            .map(|k| (Expr::Lit(Value::Int(*k)), Expr::Lit(Value::Int(self.rng.gen_range(1..=4)))))
            .collect();
        let x = self.fresh();
        self.scope.push((x.clone(), Type::record([("key", Type::INT), ("val", Type::INT)])));
        let body = self.term(&Type::REAL, d);
        self.scope.pop();
        let src = Expr::DictLit { entries, layout: Layout::Hash };
        Expr::Sum { var: x, src: b(src), body: b(body), tag: Some(tag) }
    }

    fn product(&mut self, t: &Type, d: u32) -> Expr {
        match t {
            Type::Scalar(ScalarType::Real) if self.rng.gen() => {
                Expr::Mul(b(self.term(&Type::INT, d)), b(self.term(&Type::REAL, d)))
            }
            Type::Scalar(_) => Expr::Mul(b(self.term(t, d)), b(self.term(t, d))),
            Type::Dict { key, val, .. } => {
                let s = Type::Scalar(leaf_scalar(val).unwrap_or(ScalarType::Bool));
                if matches!(**val, Type::Scalar(_)) || self.rng.gen() {
                    Expr::Mul(b(self.term(&s, d)), b(self.term(t, d)))
                } else {
                    let left = Type::dict((**key).clone(), s);
                    Expr::Mul(b(self.term(&left, d)), b(self.term(val, d)))
                }
            }
            // bool is the bottom of the promotion chain, so it scales any
            // record without changing its type
            _ => Expr::Mul(b(self.term(&Type::BOOL, d)), b(self.term(t, d))),
        }
    }
}

fn small_value(rng: &mut impl Rng, t: &Type) -> Value {
    value_of_type(rng, t)
}

/// A closed term of a randomly chosen type, at most `cfg.max_size` nodes.
/// Oversized draws are discarded and redrawn.
pub fn closed_term(rng: &mut impl Rng, cfg: &TermConfig) -> (Expr, Type) {
    loop {
        let t = result_types().choose(rng).unwrap().clone();
        let mut cx = Cx { rng: &mut *rng, scope: Vec::new(), next: 0 };
        let e = cx.term(&t, cfg.max_depth);
        if e.size() <= cfg.max_size {
            return (e, t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use sdql_core::typecheck::{type_of, TypeEnv};

    #[test]
    fn terms_are_closed_and_typed() {
        let mut r = rng(11);
        for _ in 0..2000 {
            let (e, t) = closed_term(&mut r, &TermConfig::default());
            assert!(e.free_vars().is_empty(), "{e}");
            assert!(e.size() <= 40);
            assert_eq!(type_of(&TypeEnv::new(), &e).unwrap_or_else(|err| panic!("{e}: {err}")), t, "{e}");
        }
    }

    #[test]
    fn terms_use_binders() {
        let mut r = rng(5);
        let sums = (0..300)
            .filter(|_| matches!(closed_term(&mut r, &TermConfig::default()).0, Expr::Sum { .. } | Expr::Let(..)))
            .count();
        assert!(sums > 30, "{sums}");
    }
}
