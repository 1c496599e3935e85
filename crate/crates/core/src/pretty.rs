//! Printing expressions back to concrete syntax. The output reparses to a
//! structurally equal AST; sugar is never reintroduced.

use alloc::string::String;
use core::fmt::{self, Write};

use crate::syntax::Expr;
use crate::types::{Layout, ScalarType, Type};
use crate::value::Value;

const TOP: u8 = 0;
const CMP: u8 = 2;
const ADD: u8 = 3;
const MUL: u8 = 4;
const UNARY: u8 = 5;
const POSTFIX: u8 = 6;

pub fn pretty(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, TOP).expect("writing to a String");
    s
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self, TOP)?;
        f.write_str(&s)
    }
}

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Let(..) | Expr::Sum { .. } | Expr::If(..) => TOP,
        Expr::Cmp(..) => CMP,
        Expr::Add(..) => ADD,
        Expr::Mul(..) | Expr::Div(..) => MUL,
        Expr::Not(_) => UNARY,
        Expr::Lookup(..) | Expr::Field(..) => POSTFIX,
        _ => POSTFIX + 1,
    }
}

fn is_prefix_form(e: &Expr) -> bool {
    matches!(e, Expr::Let(..) | Expr::Sum { .. } | Expr::If(..))
}

fn write_expr(out: &mut String, e: &Expr, ctx: u8) -> fmt::Result {
    if level(e) < ctx {
        out.push('(');
        write_expr(out, e, TOP)?;
        out.push(')');
        return Ok(());
    }
    match e {
        Expr::Lit(v) => write_lit(out, v),
        Expr::Var(n) => out.write_str(n),
        Expr::Sum { var, src, body, tag } => {
            out.write_str("sum")?;
            if let Some(k) = tag {
                write!(out, "<{}>", k.type_name())?;
            }
            write!(out, "({var} in ")?;
            write_expr(out, src, TOP)?;
            out.write_str(") ")?;
            write_expr(out, body, TOP)
        }
        Expr::DictLit { entries, layout: Layout::Dense } => {
            out.write_str("[| ")?;
            for (i, (_, v)) in entries.iter().enumerate() {
                if i > 0 {
                    out.write_str(", ")?;
                }
                write_expr(out, v, TOP)?;
            }
            out.write_str(" |]")
        }
        Expr::DictLit { entries, layout: Layout::Hash } => {
            if entries.is_empty() {
                return out.write_str("{ }");
            }
            out.write_str("{ ")?;
            for (i, (k, v)) in entries.iter().enumerate() {
                if i > 0 {
                    out.write_str(", ")?;
                }
                write_expr(out, k, TOP)?;
                out.write_str(" -> ")?;
                write_expr(out, v, TOP)?;
            }
            out.write_str(" }")
        }
        Expr::EmptyDict(None) => out.write_str("{ }"),
        Expr::EmptyDict(Some(t)) => write_empty(out, t),
        Expr::Lookup(d, k) => {
            write_expr(out, d, POSTFIX)?;
            out.push('(');
            write_expr(out, k, TOP)?;
            out.push(')');
            Ok(())
        }
        Expr::Record(fs) => {
            out.push('<');
            for (i, (n, x)) in fs.iter().enumerate() {
                if i > 0 {
                    out.write_str(", ")?;
                }
                write!(out, "{n} = ")?;
                write_expr(out, x, TOP)?;
            }
            out.push('>');
            Ok(())
        }
        Expr::Field(x, n) => {
            write_expr(out, x, POSTFIX)?;
            write!(out, ".{n}")
        }
        Expr::Let(x, e1, e2) => {
            write!(out, "let {x} = ")?;
            write_expr(out, e1, TOP)?;
            out.write_str(" in ")?;
            write_expr(out, e2, TOP)
        }
        Expr::If(c, t, el) => {
            out.write_str("if (")?;
            write_expr(out, c, TOP)?;
            out.write_str(") then ")?;
            match el {
                Some(el) => {
                    // A prefix form in the then-branch would swallow the else.
                    if is_prefix_form(t) {
                        out.push('(');
                        write_expr(out, t, TOP)?;
                        out.push(')');
                    } else {
                        write_expr(out, t, TOP)?;
                    }
                    out.write_str(" else ")?;
                    write_expr(out, el, TOP)
                }
                None => write_expr(out, t, TOP),
            }
        }
        Expr::Add(a, b) => binary(out, a, " + ", b, ADD),
        Expr::Mul(a, b) => binary(out, a, " * ", b, MUL),
        Expr::Div(a, b) => binary(out, a, " / ", b, MUL),
        Expr::Cmp(op, a, b) => {
            write_expr(out, a, CMP + 1)?;
            write!(out, " {} ", op.symbol())?;
            write_expr(out, b, CMP + 1)
        }
        Expr::Not(x) => {
            out.push('!');
            write_expr(out, x, UNARY)
        }
        Expr::Promote(s, t, x) => {
            write!(out, "promote_{{{},{}}}(", s.name(), t.name())?;
            write_expr(out, x, TOP)?;
            out.push(')');
            Ok(())
        }
        Expr::Concat(a, b) => {
            out.write_str("concat(")?;
            write_expr(out, a, TOP)?;
            out.write_str(", ")?;
            write_expr(out, b, TOP)?;
            out.push(')');
            Ok(())
        }
        Expr::Wrap(t, x) => call(out, "to_", *t, x),
        Expr::Unwrap(t, x) => call(out, "from_", *t, x),
        Expr::Range(x) => {
            out.write_str("range(")?;
            arg(out, x)?;
            out.push(')');
            Ok(())
        }
    }
}

fn binary(out: &mut String, a: &Expr, op: &str, b: &Expr, lvl: u8) -> fmt::Result {
    write_expr(out, a, lvl)?;
    out.write_str(op)?;
    write_expr(out, b, lvl + 1)
}

fn call(out: &mut String, prefix: &str, t: ScalarType, x: &Expr) -> fmt::Result {
    let suffix = match t {
        ScalarType::Tagged(k) => k.fn_suffix(),
        other => other.name(),
    };
    write!(out, "{prefix}{suffix}(")?;
    arg(out, x)?;
    out.push(')');
    Ok(())
}

/// A builtin argument; a bare literal is wrapped in parentheses so the
/// parser does not constant-fold it.
fn arg(out: &mut String, x: &Expr) -> fmt::Result {
    if let Expr::Lit(v) = x {
        if v.is_scalar() && !matches!(v, Value::Str(_)) {
            out.push('(');
            write_lit(out, v)?;
            out.push(')');
            return Ok(());
        }
    }
    write_expr(out, x, TOP)
}

fn write_lit(out: &mut String, v: &Value) -> fmt::Result {
    write!(out, "{v}")
}

fn write_empty(out: &mut String, t: &Type) -> fmt::Result {
    match t {
        Type::Dict { key, val, layout: Layout::Hash } => write!(out, "{{ }}_{{{key},{val}}}"),
        Type::Dict { val, layout: Layout::Dense, .. } => write!(out, "[| |]_{{{val}}}"),
        _ => out.write_str("{ }"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;
    use crate::syntax::*;

    fn round_trip(src: &str) {
        let e = parse(src).unwrap();
        let printed = pretty(&e);
        assert_eq!(parse(&printed).unwrap(), e, "{src} printed as {printed}");
    }

    #[test]
    fn empty_dictionary_annotation() {
        assert_eq!(pretty(&empty(Some(Type::dict(Type::INT, Type::REAL)))), "{ }_{int,real}");
    }

    #[test]
    fn parenthesizes_prefix_operands() {
        let e = add(sum("x", var("d"), val_of("x")), int(1));
        assert_eq!(pretty(&e), "(sum(x in d) x.val) + 1");
        let e = mul(var("a"), add(var("b"), var("c")));
        assert_eq!(pretty(&e), "a * (b + c)");
        let e = add(var("a"), add(var("b"), var("c")));
        assert_eq!(pretty(&e), "a + (b + c)");
    }

    #[test]
    fn dangling_else() {
        let inner = if_then(var("c"), int(1), None);
        let e = if_then(var("d"), inner, Some(int(2)));
        assert_eq!(parse(&pretty(&e)).unwrap(), e);
    }

    #[test]
    fn round_trips() {
        for s in [
            r#"{ "a" -> 2, "b" -> 3 } * <c = 4.0>"#,
            "sum(v in Variants) sum(g in Genes) if(g.key.contig==v.key.contig&&g.key.start<=v.key.start&&g.key.end>=v.key.start) sum(c in v.key.genotypes) { <sample = c.key.sample, gene = g.key.name, burden = c.key.call> -> g.val * c.val * v.val } else { }",
            "let tmp = sum(r <- R) { r.key.B -> r.val } in sum(x <- tmp) { <key=x.key, val=x.val> -> 1 }",
            "[| 1, 2 |]",
            "[| |]_{real}",
            "to_minsum((3.0)) + to_minsum(2.0)",
            "from_maxsum(sum(x in d) to_maxsum(x.val))",
            "!(a == b) * promote_{bool,int}(c < d)",
            "x.val / (2.0 * y)",
            "range((4))",
            "concat(x.key, y.key)",
            "f(g(x)).a.b",
            "-inf",
            r#""a\"b\n""#,
        ] {
            round_trip(s);
        }
    }
}
