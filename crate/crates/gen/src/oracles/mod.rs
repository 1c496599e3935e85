//! Random frontend queries paired with direct Rust evaluators. Each query
//! type renders to the frontend AST and evaluates over plain collections,
//! so the lowered SDQL term can be checked against an independent answer.

pub mod join;
pub mod la;
pub mod nrc;
pub mod ra;

use rand::seq::SliceRandom;
use rand::Rng;
use sdql_core::interp::{eval, Environment};
use sdql_core::parse::parse;
use sdql_core::syntax::Expr;
use sdql_core::value::values_equal;
use sdql_core::Value;

/// Int-valued row expressions over named int columns.
#[derive(Debug, Clone, PartialEq)]
pub enum IntExpr {
    Col(String),
    Const(i64),
    Add(Box<IntExpr>, Box<IntExpr>),
    Scale(Box<IntExpr>, i64),
}

impl IntExpr {
    pub fn gen(rng: &mut impl Rng, cols: &[String], depth: u32) -> IntExpr {
        let atom = |rng: &mut dyn rand::RngCore| match cols.choose(rng) {
            Some(c) if rng.gen_ratio(4, 5) => IntExpr::Col(c.clone()),
            _ => IntExpr::Const(rng.gen_range(-2..=4)),
        };
        if depth == 0 || rng.gen_ratio(1, 2) {
            return atom(rng);
        }
        match rng.gen_range(0..2) {
            0 => IntExpr::Add(Box::new(IntExpr::gen(rng, cols, depth - 1)), Box::new(atom(rng))),
            _ => IntExpr::Scale(Box::new(IntExpr::gen(rng, cols, depth - 1)), rng.gen_range(-2..=3)),
        }
    }

    /// Source text with columns read from `row.<col>`.
    pub fn render(&self, row: &str) -> String {
        match self {
            IntExpr::Col(c) => format!("{row}.{c}"),
            IntExpr::Const(n) => n.to_string(),
            IntExpr::Add(a, b) => format!("({} + {})", a.render(row), b.render(row)),
            IntExpr::Scale(a, k) => format!("({} * {k})", a.render(row)),
        }
    }

    pub fn eval(&self, row: &Value) -> i64 {
        match self {
            IntExpr::Col(c) => row.field(c).and_then(Value::as_int).unwrap_or_else(|| panic!("no int {c} in {row}")),
            IntExpr::Const(n) => *n,
            IntExpr::Add(a, b) => a.eval(row).wrapping_add(b.eval(row)),
            IntExpr::Scale(a, k) => a.eval(row).wrapping_mul(*k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pred {
    Lt(IntExpr, IntExpr),
    Le(IntExpr, IntExpr),
    Eq(IntExpr, IntExpr),
    StrEq(String, String),
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
}

impl Pred {
    pub fn gen(rng: &mut impl Rng, ints: &[String], strs: &[String], depth: u32) -> Pred {
        if depth > 0 && rng.gen_ratio(1, 4) {
            return match rng.gen_range(0..2) {
                0 => Pred::Not(Box::new(Pred::gen(rng, ints, strs, depth - 1))),
                _ => Pred::And(
                    Box::new(Pred::gen(rng, ints, strs, depth - 1)),
                    Box::new(Pred::gen(rng, ints, strs, depth - 1)),
                ),
            };
        }
        if let (Some(s), true) = (strs.choose(rng), rng.gen_ratio(1, 4)) {
            return Pred::StrEq(s.clone(), format!("s{}", rng.gen_range(0..3)));
        }
        let (a, b) = (IntExpr::gen(rng, ints, 1), IntExpr::gen(rng, ints, 1));
        match rng.gen_range(0..3) {
            0 => Pred::Lt(a, b),
            1 => Pred::Le(a, b),
            _ => Pred::Eq(a, b),
        }
    }

    pub fn render(&self, row: &str) -> String {
        match self {
            Pred::Lt(a, b) => format!("({} < {})", a.render(row), b.render(row)),
            Pred::Le(a, b) => format!("({} <= {})", a.render(row), b.render(row)),
            Pred::Eq(a, b) => format!("({} == {})", a.render(row), b.render(row)),
            Pred::StrEq(c, s) => format!("({row}.{c} == \"{s}\")"),
            Pred::Not(p) => format!("!{}", p.render(row)),
            Pred::And(p, q) => format!("({} && {})", p.render(row), q.render(row)),
        }
    }

    pub fn eval(&self, row: &Value) -> bool {
        match self {
            Pred::Lt(a, b) => a.eval(row) < b.eval(row),
            Pred::Le(a, b) => a.eval(row) <= b.eval(row),
            Pred::Eq(a, b) => a.eval(row) == b.eval(row),
            Pred::StrEq(c, s) => row.field(c) == Some(&Value::str(s)),
            Pred::Not(p) => !p.eval(row),
            Pred::And(p, q) => p.eval(row) && q.eval(row),
        }
    }
}

pub(crate) fn parse_body(src: &str) -> Expr {
    parse(src).unwrap_or_else(|err| panic!("generated `{src}` does not parse: {err}"))
}

/// Evaluate `e` under `env` and compare with `expected`.
pub fn agrees(env: &Environment, e: &Expr, expected: &Value, what: &str) -> Result<(), String> {
    let got = eval(env, e).map_err(|err| format!("{what}: `{e}` fails: {err}"))?;
    if !values_equal(&got, expected) {
        return Err(format!("{what}: `{e}` gives {got}, expected {expected}"));
    }
    Ok(())
}

/// One random RA query: the lowered term matches the direct evaluation.
pub fn ra_case(rng: &mut impl Rng) -> Result<(), String> {
    let db = ra::RaDb::generate(rng);
    let q = ra::gen_top(rng);
    let env = db.env();
    let e = sdql_core::front::lower_ra(&q.to_ra(), &env.type_env()).map_err(|err| format!("{q:?}: {err}"))?;
    agrees(&env, &e, &q.eval(&db), &format!("{q:?}"))
}

/// One random NRC query.
pub fn nrc_case(rng: &mut impl Rng) -> Result<(), String> {
    let db = nrc::NrcDb::generate(rng);
    let q = nrc::gen_top(rng);
    let env = db.env();
    let e = sdql_core::front::lower_nrc(&q.to_nrc(), &env.type_env()).map_err(|err| format!("{q:?}: {err}"))?;
    agrees(&env, &e, &q.eval(&db), &format!("{q:?}"))
}

/// One random LA expression, lowered in both matrix layouts.
pub fn la_case(rng: &mut impl Rng) -> Result<(), String> {
    use sdql_core::front::{lower_la, LaLayout};
    let db = la::LaDb::generate(rng);
    let q = la::gen_query(rng);
    let dense = la::eval_dense(&q, &db);
    for mode in [LaLayout::Flat, LaLayout::Curried] {
        let env = db.env(mode);
        let e = lower_la(&q, mode, &env.type_env()).map_err(|err| format!("{q:?} ({mode}): {err}"))?;
        agrees(&env, &e, &la::encode(&dense, mode), &format!("{q:?} ({mode})"))?;
    }
    Ok(())
}

/// The hash join and the nested loop agree with each other and with the
/// direct join for every body shape.
pub fn hash_join_case(rng: &mut impl Rng) -> Result<(), String> {
    use sdql_core::front::{build_hash_join, nested_loop_join};
    use sdql_core::syntax::var;
    let db = join::JoinDb::generate(rng);
    let env = db.env();
    let (kr, ks) = join::JoinShape::key_fns();
    for shape in join::JoinShape::ALL {
        let (body, proj) = (shape.body(), shape.projection());
        let hash = build_hash_join(&env.type_env(), var("R"), var("S"), &kr, &ks, proj.as_ref(), &body)
            .map_err(|err| format!("{shape:?}: {err}"))?;
        let nested = nested_loop_join(var("R"), var("S"), &kr, &ks, proj.as_ref(), &body);
        let expected = shape.expected(&db);
        agrees(&env, &hash, &expected, &format!("hash join {shape:?}"))?;
        agrees(&env, &nested, &expected, &format!("nested loop {shape:?}"))?;
    }
    Ok(())
}

/// The groupjoin equals aggregating after a nested-loop join.
pub fn groupjoin_case(rng: &mut impl Rng) -> Result<(), String> {
    use sdql_core::front::{build_groupjoin, groupjoin_oracle};
    use sdql_core::syntax::var;
    let db = join::JoinDb::generate(rng);
    let env = db.env();
    let (kr, ks) = join::JoinShape::key_fns();
    let (f, g) = join::groupjoin_fns();
    let gj = build_groupjoin(&env.type_env(), var("R"), var("S"), &kr, &ks, &f, &g).map_err(|err| err.to_string())?;
    let nl = groupjoin_oracle(var("R"), var("S"), &kr, &ks, &f, &g);
    let expected = join::groupjoin_expected(&db);
    agrees(&env, &gj, &expected, "groupjoin")?;
    agrees(&env, &nl, &expected, "join then aggregate")
}
