//! Syntactic analyses used as rewrite side conditions.

use alloc::vec::Vec;

use crate::syntax::Expr;
use crate::types::ScalarType;

/// How a loop variable `z` is used inside a term.
#[derive(Debug, Default, Clone, Copy)]
pub struct Uses {
    pub key: bool,
    pub val: bool,
    /// `z` itself, or a projection other than `key`/`val`.
    pub whole: bool,
}

pub fn uses(e: &Expr, z: &str) -> Uses {
    let mut u = Uses::default();
    scan(e, z, &mut u);
    u
}

fn scan(e: &Expr, z: &str, u: &mut Uses) {
    match e {
        Expr::Field(inner, f) if matches!(&**inner, Expr::Var(n) if &**n == z) => match &**f {
            "key" => u.key = true,
            "val" => u.val = true,
            _ => u.whole = true,
        },
        Expr::Var(n) => u.whole |= &**n == z,
        Expr::Sum { var, src, body, .. } => {
            scan(src, z, u);
            if &**var != z {
                scan(body, z, u);
            }
        }
        Expr::Let(y, e1, e2) => {
            scan(e1, z, u);
            if &**y != z {
                scan(e2, z, u);
            }
        }
        _ => e.children().into_iter().for_each(|c| scan(c, z, u)),
    }
}

/// `e` reads `z` at most through `z.key`.
pub fn independent(e: &Expr, z: &str) -> bool {
    let u = uses(e, z);
    !u.val && !u.whole
}

/// Syntactic zero: a zero literal, a typed empty dictionary, or a record of
/// zeros.
pub fn is_zero_term(e: &Expr) -> bool {
    match e {
        Expr::Lit(v) => v.is_zero(),
        Expr::EmptyDict(Some(_)) => true,
        Expr::Record(fs) => fs.iter().all(|(_, x)| is_zero_term(x)),
        _ => false,
    }
}

/// Whether `e`, as a function of `z.val` with `z.key` held fixed, is a
/// semiring homomorphism: it maps zero to zero and sums to sums. Only
/// `z.key` and `z.val` may be used.
pub fn linear_in(e: &Expr, z: &str) -> bool {
    let u = uses(e, z);
    if u.whole || !u.val {
        return false;
    }
    let lin = |x: &Expr| linear_in(x, z);
    let ind = |x: &Expr| independent(x, z);
    let lin_or_zero = |x: &Expr| is_zero_term(x) || linear_in(x, z);
    match e {
        Expr::Field(inner, f) => match &**inner {
            Expr::Var(n) if &**n == z => &**f == "val",
            other => lin(other),
        },
        Expr::Mul(a, b) => (lin(a) && ind(b)) || (ind(a) && lin(b)),
        // bool addition is disjunction, so lifting it out of bool is not additive
        Expr::Promote(s, _, a) => *s != ScalarType::Bool && lin(a),
        Expr::DictLit { entries, .. } => entries.iter().all(|(k, v)| ind(k) && lin(v)),
        Expr::Record(fs) => fs.iter().all(|(_, x)| lin_or_zero(x)),
        Expr::Add(a, b) => lin(a) && lin(b),
        Expr::Lookup(d, k) => lin(d) && ind(k),
        Expr::Sum { var, src, body, tag: None } => {
            if &**var == z {
                lin(src) && linear_in(body, var)
            } else {
                (lin(src) && ind(body) && linear_in(body, var)) || (ind(src) && lin(body))
            }
        }
        Expr::Let(y, e1, e2) => &**y != z && ind(e1) && lin(e2),
        Expr::If(c, t, Some(f)) => ind(c) && lin_or_zero(t) && lin_or_zero(f),
        _ => false,
    }
}

/// Whether evaluating `e` can raise a runtime error (division by zero or a
/// tagged-domain violation). Rewrites that change how often a sub-term is
/// evaluated refuse to move such terms.
pub fn may_fail(e: &Expr) -> bool {
    match e {
        Expr::Div(..) | Expr::Wrap(..) | Expr::Sum { tag: Some(_), .. } => true,
        _ => e.children().into_iter().any(may_fail),
    }
}

/// Factors of a product, left to right, looking through nested `*` only.
pub fn factors(e: &Expr) -> Vec<&Expr> {
    let mut out = Vec::new();
    fn go<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
        match e {
            Expr::Mul(a, b) => {
                go(a, out);
                go(b, out);
            }
            other => out.push(other),
        }
    }
    go(e, &mut out);
    out
}

/// Left-nested product of the given factors.
pub fn product(fs: &[&Expr]) -> Expr {
    let mut it = fs.iter();
    let first = (*it.next().expect("non-empty product")).clone();
    it.fold(first, |acc, f| Expr::Mul(alloc::boxed::Box::new(acc), alloc::boxed::Box::new((*f).clone())))
}

/// Shape counters for a term.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Structure {
    pub nodes: usize,
    pub sums: usize,
    pub lets: usize,
    /// Deepest nesting of sums.
    pub loop_depth: usize,
}

pub fn structure(e: &Expr) -> Structure {
    let mut s = Structure::default();
    fn go(e: &Expr, depth: usize, s: &mut Structure) {
        s.nodes += 1;
        match e {
            Expr::Sum { src, body, .. } => {
                s.sums += 1;
                s.loop_depth = s.loop_depth.max(depth + 1);
                go(src, depth, s);
                go(body, depth + 1, s);
            }
            _ => {
                if matches!(e, Expr::Let(..)) {
                    s.lets += 1;
                }
                e.children().into_iter().for_each(|c| go(c, depth, s));
            }
        }
    }
    go(e, 0, &mut s);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn linearity() {
        assert!(linear_in(&p("{ z.key -> z.val * V(z.key) }"), "z"));
        assert!(linear_in(&p("sum(x in z.val) { x.key -> x.val * 2 }"), "z"));
        assert!(linear_in(&p("if (z.key == 1) then z.val else 0"), "z"));
        assert!(!linear_in(&p("z.val * z.val"), "z"));
        assert!(!linear_in(&p("z.val + 1"), "z"));
        assert!(!linear_in(&p("{ z.val -> 1 }"), "z"));
        assert!(!linear_in(&p("<a = z.val, b = z>"), "z"));
        assert!(!linear_in(&p("z.key"), "z"));
    }

    #[test]
    fn factor_lists() {
        let e = p("a * (b * c) * d");
        let fs = factors(&e);
        assert_eq!(fs.len(), 4);
        assert_eq!(crate::pretty::pretty(&product(&fs)), "a * b * c * d");
    }

    #[test]
    fn shape_counts() {
        let s = structure(&p("let y = sum(x in R) x.val in sum(a in S) sum(b in a.val) y"));
        assert_eq!((s.sums, s.lets, s.loop_depth), (3, 1, 2));
    }
}
