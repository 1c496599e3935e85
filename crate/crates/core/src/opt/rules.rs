//! The individual rewrites. Each takes an elaborated term and the typing
//! environment at its position and returns the rewritten term when its left
//! hand side and side conditions match. Type preservation is checked by the
//! driver, not here.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::analysis::{factors, is_zero_term, linear_in, may_fail, product, uses};
use crate::syntax::{all_names, alpha_eq, fresh, subst, subst_proj, zero_expr, Expr};
use crate::typecheck::{type_of, TypeEnv};
use crate::types::{Layout, ScalarType, Type};
use crate::Name;

fn names_of(es: &[&Expr]) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    for e in es {
        all_names(e, &mut out);
    }
    out
}

/// Rename binder `x` of `body` to a name outside `avoid`.
fn rename_away(x: &Name, body: Expr, avoid: &BTreeSet<Name>) -> (Name, Expr) {
    if !avoid.contains(x) {
        return (x.clone(), body);
    }
    let mut av = avoid.clone();
    all_names(&body, &mut av);
    let y = fresh(x, &av);
    let body = subst(body, x, &Expr::Var(y.clone()));
    (y, body)
}

fn uniform_leaf(t: &Type) -> Option<ScalarType> {
    let mut leaves = Vec::new();
    t.value_leaves(&mut leaves);
    match leaves.as_slice() {
        [s] => Some(*s),
        _ => None,
    }
}

/// `if (c) then e1 else 0` to `promote(c) * e1`, pushing the factor into a
/// singleton dictionary's value.
pub fn if_to_mul(env: &TypeEnv, e: &Expr) -> Option<Expr> {
    let Expr::If(c, t, Some(z)) = e else {
        return None;
    };
    if !is_zero_term(z) || may_fail(t) {
        return None;
    }
    let tt = type_of(env, t).ok()?;
    if !alpha_eq(z, &zero_expr(&tt)?) {
        return None;
    }
    let u = uniform_leaf(&tt)?;
    if !ScalarType::Bool.is_subtype_of(u) {
        return None;
    }
    let factor = if u == ScalarType::Bool { (**c).clone() } else { Expr::Promote(ScalarType::Bool, u, c.clone()) };
    Some(match &**t {
        Expr::DictLit { entries, layout: Layout::Hash } if entries.len() == 1 => {
            let (k, v) = &entries[0];
            Expr::DictLit {
                entries: vec![(k.clone(), Expr::Mul(Box::new(factor), Box::new(v.clone())))],
                layout: Layout::Hash,
            }
        }
        _ => Expr::Mul(Box::new(factor), t.clone()),
    })
}

/// Inverse of [`if_to_mul`] for display: `promote(c) * e` back to a
/// conditional. Not used by the optimizer.
pub fn mul_to_if(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Mul(a, b) => match &**a {
            Expr::Promote(ScalarType::Bool, _, c) => Some(Expr::If(c.clone(), b.clone(), None)),
            _ => None,
        },
        _ => None,
    }
}

/// `let y = e in b` where `e` is a variable: substitute it.
pub fn inline_copy(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Let(y, e1, e2) if matches!(&**e1, Expr::Var(_)) => Some(subst((**e2).clone(), y, e1)),
        _ => None,
    }
}

/// Vertical fusion. Returns the rule name, `vertical-key` for the plain
/// key-mapping pipeline and `vertical-value` otherwise.
pub fn fuse_vertical(env: &TypeEnv, e: &Expr) -> Option<(&'static str, Expr)> {
    let Expr::Let(y, producer, consumer) = e else {
        return None;
    };
    let Expr::Sum { var: z, src, body: cons, tag: None } = &**consumer else {
        return None;
    };
    if !matches!(&**src, Expr::Var(n) if n == y) || cons.mentions(y) || z == y {
        return None;
    }
    let Expr::Sum { var: x, body: prod, tag: None, .. } = &**producer else {
        return None;
    };
    if !linear_in(cons, z) || may_fail(cons) || may_fail(producer) {
        return None;
    }
    let key_rule = match (&**prod, &**cons) {
        (
            Expr::DictLit { entries: pe, layout: Layout::Hash },
            Expr::DictLit { entries: ce, layout: Layout::Hash },
        ) => {
            pe.len() == 1
                && ce.len() == 1
                && is_proj(&pe[0].1, x, "val")
                && is_proj(&ce[0].1, z, "val")
                && !uses(&ce[0].0, z).val
        }
        _ => false,
    };
    // the consumer binder must not clash with anything in the producer
    let avoid = names_of(&[producer, cons]);
    let (z, cons) = if avoid.contains(z) {
        let mut av = avoid.clone();
        av.insert(z.clone());
        let z2 = fresh(z, &av);
        let c = subst((**cons).clone(), z, &Expr::Var(z2.clone()));
        (z2, c)
    } else {
        (z.clone(), (**cons).clone())
    };
    let zero = zero_expr(&type_of(env, e).ok()?)?;
    let fused = push_consumer(producer, &z, &cons, &zero)?;
    let fused = self_lookup(normalize_singletons(fused), &mut Vec::new());
    Some((if key_rule { "vertical-key" } else { "vertical-value" }, fused))
}

fn is_proj(e: &Expr, x: &str, f: &str) -> bool {
    matches!(e, Expr::Field(inner, g) if &**g == f && matches!(&**inner, Expr::Var(n) if &**n == x))
}

/// `sum(z in p) c`, distributed over the structure of the dictionary term
/// `p`. Fails when `p` has a shape the consumer cannot be pushed into.
fn push_consumer(p: &Expr, z: &Name, c: &Expr, zero: &Expr) -> Option<Expr> {
    let fv = c.free_vars();
    Some(match p {
        Expr::DictLit { entries, layout: Layout::Hash } if !entries.is_empty() => {
            let mut terms = entries.iter().map(|(k, v)| subst_proj(c.clone(), z, k, v));
            let first = terms.next()?;
            terms.fold(first, |acc, t| Expr::Add(Box::new(acc), Box::new(t)))
        }
        Expr::EmptyDict(Some(_)) => zero.clone(),
        Expr::Sum { var, src, body, tag: None } => {
            let (w, body) = rename_away(var, (**body).clone(), &fv);
            Expr::Sum { var: w, src: src.clone(), body: Box::new(push_consumer(&body, z, c, zero)?), tag: None }
        }
        Expr::Let(a, e1, body) => {
            let (a, body) = rename_away(a, (**body).clone(), &fv);
            Expr::Let(a, e1.clone(), Box::new(push_consumer(&body, z, c, zero)?))
        }
        Expr::If(cond, t, Some(f)) => Expr::If(
            cond.clone(),
            Box::new(push_consumer(t, z, c, zero)?),
            Some(Box::new(push_consumer(f, z, c, zero)?)),
        ),
        Expr::Add(a, b) => Expr::Add(
            Box::new(push_consumer(a, z, c, zero)?),
            Box::new(push_consumer(b, z, c, zero)?),
        ),
        _ => return None,
    })
}

/// `sum(w in { k -> v }) f(w)` to `f(<k, v>)` when `f` is linear in `w.val`.
pub fn eliminate_singleton(e: &Expr) -> Option<Expr> {
    let Expr::Sum { var, src, body, tag: None } = e else {
        return None;
    };
    match &**src {
        Expr::DictLit { entries, layout: Layout::Hash } if entries.len() == 1 => {
            if !linear_in(body, var) || may_fail(body) {
                return None;
            }
            let (k, v) = &entries[0];
            Some(subst_proj((**body).clone(), var, k, v))
        }
        _ => None,
    }
}

fn normalize_singletons(e: Expr) -> Expr {
    let e = e.map_children(&mut normalize_singletons);
    match eliminate_singleton(&e) {
        Some(r) => normalize_singletons(r),
        None => e,
    }
}

/// Inside `sum(r in A) ...`, the lookup `A(r.key)` is `r.val`. `scope`
/// holds the enclosing (loop variable, source variable) pairs.
fn self_lookup(e: Expr, scope: &mut Vec<(Name, Name)>) -> Expr {
    match e {
        Expr::Lookup(d, k) => {
            let hit = match (&*d, &*k) {
                (Expr::Var(a), Expr::Field(inner, f)) if &**f == "key" => match &**inner {
                    Expr::Var(r) => scope.iter().any(|(r2, a2)| r2 == r && a2 == a),
                    _ => false,
                },
                _ => false,
            };
            if hit {
                let Expr::Field(inner, _) = *k else { unreachable!() };
                return Expr::Field(inner, "val".into());
            }
            Expr::Lookup(Box::new(self_lookup(*d, scope)), Box::new(self_lookup(*k, scope)))
        }
        Expr::Sum { var, src, body, tag } => {
            let src = self_lookup(*src, scope);
            let saved = scope.clone();
            scope.retain(|(r, a)| *r != var && *a != var);
            if let Expr::Var(a) = &src {
                scope.push((var.clone(), a.clone()));
            }
            let body = self_lookup(*body, scope);
            *scope = saved;
            Expr::Sum { var, src: Box::new(src), body: Box::new(body), tag }
        }
        Expr::Let(y, e1, e2) => {
            let e1 = self_lookup(*e1, scope);
            let saved = scope.clone();
            scope.retain(|(r, a)| *r != y && *a != y);
            let e2 = self_lookup(*e2, scope);
            *scope = saved;
            Expr::Let(y, Box::new(e1), Box::new(e2))
        }
        other => other.map_children(&mut |c| self_lookup(c, scope)),
    }
}

/// One sum's contribution to a horizontally fused record: its fields and
/// how the let body refers to them.
fn horizontal_fields(y: &Name, body: &Expr, rest: &Expr) -> (Vec<(Name, Expr)>, bool) {
    if let Expr::Record(fs) = body {
        if only_projected(rest, y) {
            return (fs.clone(), true);
        }
    }
    (vec![(y.clone(), body.clone())], false)
}

/// Every free occurrence of `y` in `e` is a field projection `y.f`.
fn only_projected(e: &Expr, y: &str) -> bool {
    match e {
        Expr::Field(inner, _) if matches!(&**inner, Expr::Var(n) if &**n == y) => true,
        Expr::Var(n) => &**n != y,
        Expr::Sum { var, src, body, .. } => only_projected(src, y) && (&**var == y || only_projected(body, y)),
        Expr::Let(x, e1, e2) => only_projected(e1, y) && (&**x == y || only_projected(e2, y)),
        _ => e.children().into_iter().all(|c| only_projected(c, y)),
    }
}

/// `let y1 = sum(x in e1) f1 in let y2 = sum(x in e1) f2 in f3` to a single
/// record-valued sum.
pub fn fuse_horizontal(e: &Expr) -> Option<Expr> {
    let Expr::Let(y1, s1, inner) = e else {
        return None;
    };
    let Expr::Let(y2, s2, f3) = &**inner else {
        return None;
    };
    let (Expr::Sum { var: x1, src: e1, body: b1, tag: None }, Expr::Sum { var: x2, src: e1b, body: b2, tag: None }) =
        (&**s1, &**s2)
    else {
        return None;
    };
    if y1 == y2 || s2.mentions(y1) || !alpha_eq(e1, e1b) {
        return None;
    }
    // one binder for both bodies
    let mut avoid = b1.free_vars();
    avoid.remove(x1);
    let mut fv2 = b2.free_vars();
    fv2.remove(x2);
    avoid.extend(fv2);
    let x = fresh(x1, &avoid);
    let b1 = subst((**b1).clone(), x1, &Expr::Var(x.clone()));
    let b2 = subst((**b2).clone(), x2, &Expr::Var(x.clone()));

    let (mut fields, merged1) = horizontal_fields(y1, &b1, f3);
    let (fields2, merged2) = horizontal_fields(y2, &b2, f3);
    for (n, _) in &fields2 {
        if fields.iter().any(|(m, _)| m == n) {
            return None;
        }
    }
    fields.extend(fields2);

    let mut taken = names_of(&[e, f3]);
    taken.extend(fields.iter().map(|(n, _)| n.clone()));
    let tmp = fresh(&format!("{y1}{y2}"), &taken);
    let tv = Expr::Var(tmp.clone());
    let refer = |f3: Expr, y: &Name, merged: bool| {
        let with = if merged { tv.clone() } else { Expr::Field(Box::new(tv.clone()), y.clone()) };
        subst(f3, y, &with)
    };
    let f3 = refer((**f3).clone(), y2, merged2);
    let f3 = refer(f3, y1, merged1);
    Some(Expr::Let(
        tmp,
        Box::new(Expr::Sum { var: x, src: e1.clone(), body: Box::new(Expr::Record(fields)), tag: None }),
        Box::new(f3),
    ))
}

/// `sum(x in e1) let y = e2 in f` to `let y = e2 in sum(x in e1) f` when
/// `e2` does not depend on `x`.
pub fn hoist_invariant(e: &Expr) -> Option<Expr> {
    let Expr::Sum { var: x, src: e1, body, tag: None } = e else {
        return None;
    };
    let Expr::Let(y, e2, f) = &**body else {
        return None;
    };
    if e2.mentions(x) || may_fail(e2) {
        return None;
    }
    let mut avoid = e1.free_vars();
    avoid.insert(x.clone());
    let (y, f) = rename_away(y, (**f).clone(), &avoid);
    Some(Expr::Let(
        y,
        e2.clone(),
        Box::new(Expr::Sum { var: x.clone(), src: e1.clone(), body: Box::new(f), tag: None }),
    ))
}

/// Loop factorization. `left` hoists a loop-invariant prefix of the body's
/// product (or the invariant key of a singleton body); `right` hoists an
/// invariant suffix.
pub fn factorize(e: &Expr, left: bool, right: bool) -> Option<(&'static str, Expr)> {
    let Expr::Sum { var: x, src, body, tag: None } = e else {
        return None;
    };
    let resum = |b: Expr| Expr::Sum { var: x.clone(), src: src.clone(), body: Box::new(b), tag: None };
    if left {
        if let Expr::DictLit { entries, layout: Layout::Hash } = &**body {
            if entries.len() == 1 && !entries[0].0.mentions(x) && !may_fail(&entries[0].0) {
                let (k, v) = &entries[0];
                return Some((
                    "factorize-left",
                    Expr::DictLit { entries: vec![(k.clone(), resum(v.clone()))], layout: Layout::Hash },
                ));
            }
        }
    }
    let fs = factors(body);
    if fs.len() < 2 {
        return None;
    }
    let invariant = |f: &&&Expr| !f.mentions(x) && !may_fail(f);
    let pre = fs.iter().take_while(&invariant).count();
    if left && pre > 0 && pre < fs.len() {
        return Some((
            "factorize-left",
            Expr::Mul(Box::new(product(&fs[..pre])), Box::new(resum(product(&fs[pre..])))),
        ));
    }
    let suf = fs.iter().rev().take_while(&invariant).count();
    if right && suf > 0 && suf < fs.len() {
        let cut = fs.len() - suf;
        return Some((
            "factorize-right",
            Expr::Mul(Box::new(resum(product(&fs[..cut]))), Box::new(product(&fs[cut..]))),
        ));
    }
    None
}
