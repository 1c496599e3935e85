//! Equi-joins of bags `R : { <a, b> -> int }` and `S : { <a, c> -> int }`
//! on `a`, with the expected results computed by a direct nested loop.

use std::collections::BTreeMap;

use rand::Rng;
use sdql_core::front::{JoinBody, RowFn};
use sdql_core::interp::Environment;
use sdql_core::parse::parse_type;
use sdql_core::Value;

use super::parse_body;

#[derive(Debug, Clone)]
pub struct JoinDb {
    /// `(a, b, multiplicity)`.
    pub r: Vec<(i64, i64, i64)>,
    /// `(a, c, multiplicity)`.
    pub s: Vec<(i64, i64, i64)>,
}

fn rel(rows: &[(i64, i64, i64)], second: &str) -> Value {
    Value::dict(rows.iter().map(|&(a, x, m)| (Value::record([("a", Value::Int(a)), (second, Value::Int(x))]), Value::Int(m))))
        .unwrap()
}

fn draw(rng: &mut impl Rng) -> Vec<(i64, i64, i64)> {
    let mut m = BTreeMap::new();
    for _ in 0..rng.gen_range(0..10) {
        *m.entry((rng.gen_range(0..5), rng.gen_range(-2..6))).or_insert(0) += rng.gen_range(1..=3);
    }
    m.into_iter().map(|((a, x), n)| (a, x, n)).collect()
}

impl JoinDb {
    pub fn generate(rng: &mut impl Rng) -> JoinDb {
        JoinDb { r: draw(rng), s: draw(rng) }
    }

    pub fn env(&self) -> Environment {
        Environment::new()
            .with("R", rel(&self.r, "b"), parse_type("{ <a: int, b: int> -> int }").unwrap())
            .with("S", rel(&self.s, "c"), parse_type("{ <a: int, c: int> -> int }").unwrap())
    }

    fn pairs(&self) -> impl Iterator<Item = (&(i64, i64, i64), &(i64, i64, i64))> {
        self.r.iter().flat_map(move |r| self.s.iter().filter(move |s| s.0 == r.0).map(move |s| (r, s)))
    }
}

/// Per-pair join outputs the hash join is tested with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinShape {
    /// `{ <a, b, c> -> r.val * s.val }`: the bag of joined rows.
    Rows,
    /// `r.val * s.val * (r.key.b + s.key.c)`: a scalar aggregate.
    Weighted,
    /// `{ r.key.b -> r.val * s.val * s.key.c }` with the build side
    /// projected to `<c>`.
    Projected,
}

impl JoinShape {
    pub const ALL: [JoinShape; 3] = [JoinShape::Rows, JoinShape::Weighted, JoinShape::Projected];

    pub fn key_fns() -> (RowFn, RowFn) {
        (RowFn::new("p", parse_body("p.a")), RowFn::new("q", parse_body("q.a")))
    }

    pub fn body(self) -> JoinBody {
        let src = match self {
            JoinShape::Rows => "{ <a = r.key.a, b = r.key.b, c = s.key.c> -> r.val * s.val }",
            JoinShape::Weighted => "r.val * s.val * (r.key.b + s.key.c)",
            JoinShape::Projected => "{ r.key.b -> r.val * s.val * s.key.c }",
        };
        JoinBody { r: "r".into(), s: "s".into(), body: parse_body(src) }
    }

    pub fn projection(self) -> Option<RowFn> {
        (self == JoinShape::Projected).then(|| RowFn::new("q", parse_body("<c = q.c>")))
    }

    pub fn expected(self, db: &JoinDb) -> Value {
        match self {
            JoinShape::Rows => Value::dict(
                db.pairs()
                    .map(|(r, s)| {
                        let row = Value::record([("a", Value::Int(r.0)), ("b", Value::Int(r.1)), ("c", Value::Int(s.1))]);
                        (row, Value::Int(r.2 * s.2))
                    })
                    .collect::<Vec<_>>(),
            )
            .unwrap(),
            JoinShape::Weighted => Value::Int(db.pairs().map(|(r, s)| r.2 * s.2 * (r.1 + s.1)).sum()),
            JoinShape::Projected => {
                Value::dict(db.pairs().map(|(r, s)| (Value::Int(r.1), Value::Int(r.2 * s.2 * s.1))).collect::<Vec<_>>())
                    .unwrap()
            }
        }
    }
}

/// Groupjoin of `R` and `S` on `a` with `f(r) = r.val * r.key.b` and
/// `g(s) = s.val * s.key.c`: `{ a -> Σ f(r) * Σ g(s) }` over matching rows.
pub fn groupjoin_fns() -> (RowFn, RowFn) {
    (RowFn::new("p", parse_body("p.val * p.key.b")), RowFn::new("q", parse_body("q.val * q.key.c")))
}

pub fn groupjoin_expected(db: &JoinDb) -> Value {
    Value::dict(db.pairs().map(|(r, s)| (Value::Int(r.0), Value::Int(r.2 * r.1 * s.2 * s.1))).collect::<Vec<_>>()).unwrap()
}
