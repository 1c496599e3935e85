//! Concrete syntax for frontend terms, used by `ra:`, `nrc:` and `la:`
//! blocks in scripts. Functions are written `v -> expr` with an SDQL body;
//! `_` stands for an omitted function.
//!
//! ```text
//! ra:   R | select(f, q) | project(f, q) | union(q, q) | intersect(q, q)
//!       | diff(q, q) | product(q, q) | join(f, q, q) | groupagg(f|_, agg, f|_, q)
//! nrc:  for x in e union e | sng(e) | flatten(e) | empty(T) | uplus(e, e)
//!       | product(e, e) | if (c) then e | let x = e in e | tuple(a = e, ...)
//!       | sumby(f|_, f, e) | groupby(f, e) | <sdql term>
//! la:   V | scalar(e) | vadd | madd | scale | had | dot | matmul | matvec (2 args)
//!       | vsum | transpose | trace | curry | uncurry (1 arg)
//! ```

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use super::{lower_la, lower_nrc, lower_ra, AggKind, FrontendError, La, LaLayout, Nrc, Ra, RowFn};
use crate::parse::{ParseError, Parser};
use crate::syntax::Expr;
use crate::typecheck::TypeEnv;

#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Ra(Ra),
    Nrc(Nrc),
    La(LaLayout, La),
}

impl Block {
    pub fn lower(&self, env: &TypeEnv) -> Result<Expr, FrontendError> {
        match self {
            Block::Ra(q) => lower_ra(q, env),
            Block::Nrc(q) => lower_nrc(q, env),
            Block::La(mode, q) => lower_la(q, *mode, env),
        }
    }
}

/// Split a `ra:`, `nrc:`, `la:` or `la[curried]:` prefix off `src`.
pub fn block_kind(src: &str) -> Option<(&str, &str)> {
    let s = src.trim_start();
    ["ra:", "nrc:", "la:", "la[flat]:", "la[curried]:"]
        .into_iter()
        .find_map(|k| s.strip_prefix(k).map(|rest| (k.trim_end_matches(':'), rest)))
}

/// Parse the body of a block of the given kind (`ra`, `nrc`, `la`,
/// `la[flat]` or `la[curried]`).
pub fn parse_block(kind: &str, src: &str) -> Result<Block, ParseError> {
    let mut p = Parser::new(src)?;
    let b = match kind {
        "ra" => Block::Ra(ra(&mut p)?),
        "nrc" => Block::Nrc(nrc(&mut p)?),
        "la" | "la[flat]" => Block::La(LaLayout::Flat, la(&mut p)?),
        "la[curried]" => Block::La(LaLayout::Curried, la(&mut p)?),
        _ => return Err(p.error(format!("unknown block kind `{kind}`"))),
    };
    p.expect_eof()?;
    Ok(b)
}

fn func(p: &mut Parser) -> Result<RowFn, ParseError> {
    let v = p.ident()?;
    p.expect("->")?;
    Ok(RowFn { var: v, body: p.expr()? })
}

fn opt_func(p: &mut Parser) -> Result<Option<RowFn>, ParseError> {
    if p.eat_ident("_") {
        return Ok(None);
    }
    func(p).map(Some)
}

fn call<T>(p: &mut Parser, f: impl FnOnce(&mut Parser) -> Result<T, ParseError>) -> Result<T, ParseError> {
    p.expect("(")?;
    let r = f(p)?;
    p.expect(")")?;
    Ok(r)
}

fn ra(p: &mut Parser) -> Result<Ra, ParseError> {
    let name = p.ident()?;
    if !p.is_sym("(") {
        return Ok(Ra::Scan(name));
    }
    let two = |p: &mut Parser| -> Result<(Ra, Ra), ParseError> {
        let a = ra(p)?;
        p.expect(",")?;
        Ok((a, ra(p)?))
    };
    call(p, |p| {
        Ok(match &*name {
            "select" | "project" => {
                let f = func(p)?;
                p.expect(",")?;
                let q = ra(p)?;
                if &*name == "select" {
                    Ra::select(f, q)
                } else {
                    Ra::project(f, q)
                }
            }
            "union" => two(p).map(|(a, b)| Ra::union(a, b))?,
            "intersect" => two(p).map(|(a, b)| Ra::intersect(a, b))?,
            "diff" => two(p).map(|(a, b)| Ra::difference(a, b))?,
            "product" => two(p).map(|(a, b)| Ra::product(a, b))?,
            "join" => {
                let f = func(p)?;
                p.expect(",")?;
                let (a, b) = two(p)?;
                Ra::join(f, a, b)
            }
            "groupagg" => {
                let keys = opt_func(p)?;
                p.expect(",")?;
                let agg = agg_kind(p)?;
                p.expect(",")?;
                let f = opt_func(p)?;
                p.expect(",")?;
                Ra::GroupAgg { keys, agg, f, input: Box::new(ra(p)?) }
            }
            other => return Err(p.error(format!("unknown relational operator `{other}`"))),
        })
    })
}

fn agg_kind(p: &mut Parser) -> Result<AggKind, ParseError> {
    let n = match p.bump() {
        crate::parse::Tok::Ident(n) => n,
        t => return Err(p.error(format!("expected an aggregate, found {t}"))),
    };
    AggKind::from_name(&n).ok_or_else(|| p.error(format!("unknown aggregate `{n}`")))
}

fn nrc(p: &mut Parser) -> Result<Nrc, ParseError> {
    if p.eat_ident("for") {
        let x = p.ident()?;
        if !p.eat_ident("in") {
            return Err(p.error("expected `in`"));
        }
        let src = nrc(p)?;
        if !p.eat_ident("union") {
            return Err(p.error("expected `union`"));
        }
        return Ok(Nrc::for_union(&x, src, nrc(p)?));
    }
    if p.eat_ident("if") {
        let c = p.expr()?;
        if !p.eat_ident("then") {
            return Err(p.error("expected `then`"));
        }
        return Ok(Nrc::if_then(c, nrc(p)?));
    }
    if p.eat_ident("let") {
        let x = p.ident()?;
        p.expect("=")?;
        let e1 = nrc(p)?;
        if !p.eat_ident("in") {
            return Err(p.error("expected `in`"));
        }
        return Ok(Nrc::Let(x, Box::new(e1), Box::new(nrc(p)?)));
    }
    let op = match p.peek() {
        crate::parse::Tok::Ident(n) if matches!(p.peek_at(1), crate::parse::Tok::Sym("(")) => n.clone(),
        _ => return Ok(Nrc::Prim(p.expr()?)),
    };
    let two = |p: &mut Parser| -> Result<(Nrc, Nrc), ParseError> {
        let a = nrc(p)?;
        p.expect(",")?;
        Ok((a, nrc(p)?))
    };
    let q = match &*op {
        "sng" | "flatten" | "uplus" | "product" | "empty" | "tuple" | "sumby" | "groupby" => {
            p.bump();
            call(p, |p| {
                Ok(match &*op {
                    "sng" => Nrc::sng(nrc(p)?),
                    "flatten" => Nrc::flatten(nrc(p)?),
                    "uplus" => two(p).map(|(a, b)| Nrc::union(a, b))?,
                    "product" => two(p).map(|(a, b)| Nrc::product(a, b))?,
                    "empty" => Nrc::Empty(p.ty()?),
                    "tuple" => {
                        let mut fs = Vec::new();
                        loop {
                            let n = p.ident()?;
                            p.expect("=")?;
                            fs.push((n, nrc(p)?));
                            if !p.eat(",") {
                                break;
                            }
                        }
                        Nrc::Record(fs)
                    }
                    "sumby" => {
                        let keys = opt_func(p)?;
                        p.expect(",")?;
                        let value = func(p)?;
                        p.expect(",")?;
                        Nrc::SumBy { keys, value, input: Box::new(nrc(p)?) }
                    }
                    _ => {
                        let keys = func(p)?;
                        p.expect(",")?;
                        Nrc::GroupBy { keys, input: Box::new(nrc(p)?) }
                    }
                })
            })?
        }
        _ => Nrc::Prim(p.expr()?),
    };
    Ok(q)
}

fn la(p: &mut Parser) -> Result<La, ParseError> {
    let name = p.ident()?;
    if !p.is_sym("(") {
        return Ok(La::Var(name));
    }
    call(p, |p| {
        let binary: Option<fn(Box<La>, Box<La>) -> La> = match &*name {
            "vadd" => Some(La::VecAdd),
            "madd" => Some(La::MatAdd),
            "scale" => Some(La::Scale),
            "had" => Some(La::Hadamard),
            "dot" => Some(La::Dot),
            "matmul" => Some(La::MatMul),
            "matvec" => Some(La::MatVec),
            _ => None,
        };
        if let Some(op) = binary {
            let a = la(p)?;
            p.expect(",")?;
            return Ok(La::bin(op, a, la(p)?));
        }
        Ok(match &*name {
            "scalar" => La::Scalar(p.expr()?),
            "vsum" => La::un(La::VecSum, la(p)?),
            "transpose" => La::un(La::Transpose, la(p)?),
            "trace" => La::un(La::Trace, la(p)?),
            "curry" => La::Convert(LaLayout::Curried, Box::new(la(p)?)),
            "uncurry" => La::Convert(LaLayout::Flat, Box::new(la(p)?)),
            other => return Err(p.error(format!("unknown linear algebra operator `{other}`"))),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{eval, Environment};
    use crate::parse::{parse_type, parse_value};
    use crate::value::values_equal;
    use crate::Value;

    fn run(src: &str, env: &Environment) -> Value {
        let (kind, body) = block_kind(src).unwrap();
        let b = parse_block(kind, body).unwrap();
        eval(env, &b.lower(&env.type_env()).unwrap()).unwrap()
    }

    #[test]
    fn ra_blocks() {
        let t = parse_type("{ <a: int, b: int> -> bool }").unwrap();
        let env = Environment::new().with("R", parse_value("{ <a=1, b=2>, <a=2, b=2>, <a=3, b=5> }").unwrap(), t);
        let v = run("ra: project(r -> <b = r.b>, select(r -> r.a > 1, R))", &env);
        assert!(values_equal(&v, &parse_value("{ <b=2>, <b=5> }").unwrap()));
        assert_eq!(run("ra: groupagg(_, count, _, R)", &env), Value::Int(3));
        let g = run("ra: groupagg(r -> r.b, sum, r -> r.a, R)", &env);
        assert!(values_equal(&g, &parse_value("{ <key=2, val=3> -> 1, <key=5, val=3> -> 1 }").unwrap()));
    }

    #[test]
    fn nrc_blocks() {
        let t = parse_type("{ <xs: { int -> int }> -> int }").unwrap();
        let env = Environment::new().with("B", parse_value("{ <xs = { 1 -> 1, 2 -> 1 }> -> 2 }").unwrap(), t);
        let v = run("nrc: for b in B union for x in b.xs union if (x > 1) then sng(tuple(v = x))", &env);
        assert!(values_equal(&v, &parse_value("{ <v=2> -> 2 }").unwrap()));
        let f = run("nrc: flatten(sng(sng(3)))", &env);
        assert!(values_equal(&f, &parse_value("{ 3 -> 1 }").unwrap()));
    }

    #[test]
    fn la_blocks() {
        let t = parse_type("{ int -> { int -> int } }").unwrap();
        let env = Environment::new().with("A", parse_value("{ 0 -> { 0 -> 1, 1 -> 2 } }").unwrap(), t);
        let v = run("la[curried]: matmul(transpose(A), A)", &env);
        assert!(values_equal(&v, &parse_value("{ 0 -> { 0 -> 1, 1 -> 2 }, 1 -> { 0 -> 2, 1 -> 4 } }").unwrap()));
        assert_eq!(run("la[curried]: trace(A)", &env), Value::Int(1));
        assert!(parse_block("la", "frobnicate(A)").is_err());
    }
}
