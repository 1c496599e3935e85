//! Random instances of each optimizer rule's left-hand side, written as
//! source text over a few randomly filled relations.

use rand::seq::SliceRandom;
use rand::Rng;
use sdql_core::interp::Environment;
use sdql_core::opt::Rule;
use sdql_core::parse::{parse, parse_type};
use sdql_core::syntax::Expr;
use sdql_core::Value;

/// `R`, `S : { int -> int }`, `B : { <a: int, b: int> -> int }` and the
/// curried `T : { int -> { int -> int } }`, with random contents.
pub fn rewrite_env(rng: &mut impl Rng) -> Environment {
    let mut env = Environment::new();
    let int_dict = |rng: &mut dyn rand::RngCore, n: usize| {
        Value::dict((0..n).map(|_| (Value::Int(rng.gen_range(0..10)), Value::Int(rng.gen_range(-3..=5))))).unwrap()
    };
    let n = rng.gen_range(0..8);
    env.bind("R", int_dict(rng, n), parse_type("{ int -> int }").unwrap());
    let n = rng.gen_range(0..8);
    env.bind("S", int_dict(rng, n), parse_type("{ int -> int }").unwrap());
    let n = rng.gen_range(0..8);
    let bag = Value::dict((0..n).map(|_| {
        let row = Value::record([("a", Value::Int(rng.gen_range(0..4))), ("b", Value::Int(rng.gen_range(0..4)))]);
        (row, Value::Int(rng.gen_range(1..=3)))
    }))
    .unwrap();
    env.bind("B", bag, parse_type("{ <a: int, b: int> -> int }").unwrap());
    let n = rng.gen_range(0..5);
    let rows: Vec<_> = (0..n)
        .map(|_| {
            let m = rng.gen_range(1..4);
            (Value::Int(rng.gen_range(0..6)), int_dict(rng, m))
        })
        .collect();
    env.bind("T", Value::dict(rows).unwrap(), parse_type("{ int -> { int -> int } }").unwrap());
    env
}

fn c(rng: &mut impl Rng) -> i64 {
    rng.gen_range(-2..=4)
}

/// An int-valued expression over `atoms`.
fn int_expr(rng: &mut impl Rng, atoms: &[&str], depth: u32) -> String {
    let atom = |rng: &mut dyn rand::RngCore| atoms.choose(rng).unwrap().to_string();
    if depth == 0 {
        return if rng.gen_ratio(3, 4) { atom(rng) } else { c(rng).to_string() };
    }
    let d = depth - 1;
    match rng.gen_range(0..5) {
        0 => atom(rng),
        1 => format!("({} + {})", int_expr(rng, atoms, d), int_expr(rng, atoms, d)),
        2 => format!("({} * {})", int_expr(rng, atoms, d), c(rng)),
        3 => format!(
            "(if ({} < {}) then {} else {})",
            int_expr(rng, atoms, d),
            c(rng),
            int_expr(rng, atoms, d),
            int_expr(rng, atoms, d)
        ),
        _ => format!("({} + {})", atom(rng), c(rng)),
    }
}

fn pred(rng: &mut impl Rng, atoms: &[&str]) -> String {
    let op = ["<", "<=", "==", "!="].choose(rng).unwrap();
    format!("{} {op} {}", int_expr(rng, atoms, 1), c(rng))
}

/// A source relation and the int-typed paths into its key.
fn source(rng: &mut impl Rng, x: &str) -> (&'static str, Vec<String>) {
    if rng.gen() {
        ("R", vec![format!("{x}.key")])
    } else if rng.gen() {
        ("S", vec![format!("{x}.key")])
    } else {
        ("B", vec![format!("{x}.key.a"), format!("{x}.key.b")])
    }
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// An invariant int term: a constant, a lookup, or a whole-relation sum.
fn invariant(rng: &mut impl Rng) -> String {
    match rng.gen_range(0..4) {
        0 => c(rng).to_string(),
        1 => format!("S({})", rng.gen_range(0..10)),
        2 => format!("(sum(w in S) w.val * {})", c(rng)),
        _ => format!("({} + R({}))", c(rng), rng.gen_range(0..10)),
    }
}

fn vertical_key(rng: &mut impl Rng) -> String {
    let (src, ks) = source(rng, "x");
    let ks = refs(&ks);
    if rng.gen() {
        let (k1, k2) = (int_expr(rng, &ks, 2), int_expr(rng, &ks, 2));
        let c2 = int_expr(rng, &["z.key.p", "z.key.q"], 2);
        format!("let y = sum(x in {src}) {{ <p = {k1}, q = {k2}> -> x.val }} in sum(z in y) {{ {c2} -> z.val }}")
    } else {
        let k1 = int_expr(rng, &ks, 2);
        let k2 = int_expr(rng, &["z.key"], 2);
        format!("let y = sum(x in {src}) {{ {k1} -> x.val }} in sum(z in y) {{ {k2} -> z.val }}")
    }
}

fn vertical_value(rng: &mut impl Rng) -> String {
    let (src, ks) = source(rng, "x");
    let mut atoms = ks.clone();
    atoms.push("x.val".into());
    let (ks, atoms) = (refs(&ks), refs(&atoms));
    let k1 = int_expr(rng, &ks, 1);
    let v1 = format!("x.val * {}", int_expr(rng, &atoms, 1));
    let mut producer = format!("{{ {k1} -> {v1} }}");
    if rng.gen() {
        producer = format!("if ({}) then {producer} else {{ }}", pred(rng, &ks));
    }
    let consumer = match rng.gen_range(0..3) {
        0 => format!("z.val * {}", int_expr(rng, &["z.key"], 1)),
        1 => format!("{{ {} -> z.val * {} }}", int_expr(rng, &["z.key"], 1), int_expr(rng, &["z.key"], 1)),
        _ => format!("{{ z.key -> {} * z.val }}", c(rng)),
    };
    format!("let y = sum(x in {src}) {producer} in sum(z in y) {consumer}")
}

fn horizontal(rng: &mut impl Rng) -> String {
    let (src, ks1) = source(rng, "x");
    let ks2: Vec<String> = ks1.iter().map(|k| k.replacen("x.", "v.", 1)).collect();
    let (a1, a2) = (refs(&ks1), refs(&ks2));
    if rng.gen() {
        let f1 = format!("x.val * {}", int_expr(rng, &a1, 1));
        let f2 = format!("v.val * {}", int_expr(rng, &a2, 1));
        let g = ["y1 + y2", "y1 * y2", "<a = y1, b = y2>", "{ y1 -> y2 }"].choose(rng).unwrap();
        format!("let y1 = sum(x in {src}) {f1} in let y2 = sum(v in {src}) {f2} in {g}")
    } else {
        let f1 = format!("{{ {} -> x.val }}", int_expr(rng, &a1, 1));
        let f2 = format!("{{ {} -> v.val * {} }}", int_expr(rng, &a2, 1), c(rng));
        let g = ["y1 + y2", "sum(p in y1) p.val * y2(p.key)"].choose(rng).unwrap();
        format!("let y1 = sum(x in {src}) {f1} in let y2 = sum(v in {src}) {f2} in {g}")
    }
}

fn licm(rng: &mut impl Rng) -> String {
    let inv = invariant(rng);
    if rng.gen_ratio(1, 4) {
        let k = int_expr(rng, &["x.key", "w.key"], 1);
        return format!("sum(x in T) let y = {inv} in sum(w in x.val) {{ {k} -> w.val * y }}");
    }
    let (src, ks) = source(rng, "x");
    let mut atoms = ks.clone();
    atoms.push("y".into());
    let (ks, atoms) = (refs(&ks), refs(&atoms));
    let body = match rng.gen_range(0..3) {
        0 => format!("{{ {} -> x.val * y }}", int_expr(rng, &ks, 1)),
        1 => format!("x.val * {}", int_expr(rng, &atoms, 1)),
        _ => format!("if ({} < y) then x.val else 0", int_expr(rng, &ks, 1)),
    };
    format!("sum(x in {src}) let y = {inv} in {body}")
}

fn varying(rng: &mut impl Rng, ks: &[&str]) -> String {
    match rng.gen_range(0..3) {
        0 => "x.val".into(),
        1 => format!("x.val * {}", int_expr(rng, ks, 1)),
        _ => format!("{{ {} -> x.val }}", int_expr(rng, ks, 1)),
    }
}

fn factorize_left(rng: &mut impl Rng) -> String {
    let (src, ks) = source(rng, "x");
    let ks = refs(&ks);
    if rng.gen_ratio(1, 3) {
        let k = ["3", "\"k\"", "<a = 1, b = 2>"].choose(rng).unwrap();
        return format!("sum(x in {src}) {{ {k} -> {} }}", varying(rng, &ks));
    }
    format!("sum(x in {src}) {} * {}", invariant(rng), varying(rng, &ks))
}

fn factorize_right(rng: &mut impl Rng) -> String {
    let (src, ks) = source(rng, "x");
    let ks = refs(&ks);
    format!("sum(x in {src}) {} * {}", varying(rng, &ks), invariant(rng))
}

fn if_to_mul(rng: &mut impl Rng) -> String {
    let (src, ks) = source(rng, "x");
    let ks = refs(&ks);
    let p = pred(rng, &ks);
    match rng.gen_range(0..5) {
        0 => format!("sum(x in {src}) if ({p}) then x.val * {} else 0", c(rng)),
        1 => format!("sum(x in {src}) if ({p}) then {{ {} -> x.val }} else {{ }}", int_expr(rng, &ks, 1)),
        2 => format!("sum(x in {src}) if ({p}) then promote_{{int,real}}(x.val) * 1.5 else 0.0"),
        3 => format!("sum(x in {src}) if ({p}) then <a = x.val, b = {}> else <a = 0, b = 0>", c(rng)),
        _ => format!("if (S({}) < {}) then R else {{ }}", rng.gen_range(0..10), c(rng)),
    }
}

/// Source text of a random instance of `rule`'s left-hand side.
pub fn instance_text(rule: Rule, rng: &mut impl Rng) -> String {
    match rule {
        Rule::IfToMul => if_to_mul(rng),
        Rule::VerticalKey => vertical_key(rng),
        Rule::VerticalValue => vertical_value(rng),
        Rule::Horizontal => horizontal(rng),
        Rule::Licm => licm(rng),
        Rule::FactorizeLeft => factorize_left(rng),
        Rule::FactorizeRight => factorize_right(rng),
    }
}

/// A random instance of `rule` with an environment for its free variables.
pub fn instance(rule: Rule, rng: &mut impl Rng) -> (Environment, Expr) {
    let src = instance_text(rule, rng);
    let e = parse(&src).unwrap_or_else(|err| panic!("generated `{src}` does not parse: {err}"));
    (rewrite_env(rng), e)
}
