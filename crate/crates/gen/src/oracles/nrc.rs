//! Random nested relational calculus queries over bags `B1`, `B2` of
//! `<a: int, b: int>` rows with int multiplicities.

use std::collections::BTreeMap;

use rand::Rng;
use sdql_core::front::{Nrc, RowFn};
use sdql_core::interp::Environment;
use sdql_core::parse::parse_type;
use sdql_core::Value;

use super::{parse_body, IntExpr, Pred};

/// A bag as element → positive multiplicity.
pub type Bag = BTreeMap<Value, i64>;

fn cols() -> Vec<String> {
    vec!["a".into(), "b".into()]
}

#[derive(Debug, Clone, PartialEq)]
pub enum NrcQuery {
    Base(&'static str),
    /// `for x in q union if (p) then sng(<a = f, b = g>)`.
    Map { p: Pred, a: IntExpr, b: IntExpr, input: Box<NrcQuery> },
    /// `flatten(for x in q union sng(if (p) then sng(x)))`.
    Filter(Pred, Box<NrcQuery>),
    Union(Box<NrcQuery>, Box<NrcQuery>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum NrcTop {
    Bag(NrcQuery),
    Product(NrcQuery, NrcQuery),
    SumBy { key: Option<IntExpr>, value: IntExpr, input: NrcQuery },
    GroupBy { key: IntExpr, input: NrcQuery },
}

#[derive(Debug, Clone)]
pub struct NrcDb {
    pub b1: Bag,
    pub b2: Bag,
}

fn row(a: i64, b: i64) -> Value {
    Value::record([("a", Value::Int(a)), ("b", Value::Int(b))])
}

fn bag_value(bag: &Bag) -> Value {
    Value::dict(bag.iter().map(|(k, m)| (k.clone(), Value::Int(*m)))).expect("int multiplicities")
}

impl NrcDb {
    pub fn generate(rng: &mut impl Rng) -> NrcDb {
        let draw = |rng: &mut dyn rand::RngCore| {
            let mut bag = Bag::new();
            for _ in 0..rng.gen_range(0..7) {
                *bag.entry(row(rng.gen_range(0..4), rng.gen_range(0..4))).or_default() += rng.gen_range(1..=3);
            }
            bag
        };
        NrcDb { b1: draw(rng), b2: draw(rng) }
    }

    pub fn env(&self) -> Environment {
        let t = parse_type("{ <a: int, b: int> -> int }").unwrap();
        Environment::new().with("B1", bag_value(&self.b1), t.clone()).with("B2", bag_value(&self.b2), t)
    }
}

fn bx<T>(x: T) -> Box<T> {
    Box::new(x)
}

pub fn gen_query(rng: &mut impl Rng, depth: u32) -> NrcQuery {
    if depth == 0 || rng.gen_ratio(1, 5) {
        return NrcQuery::Base(if rng.gen() { "B1" } else { "B2" });
    }
    let d = depth - 1;
    match rng.gen_range(0..3) {
        0 => NrcQuery::Map {
            p: Pred::gen(rng, &cols(), &[], 1),
            a: IntExpr::gen(rng, &cols(), 1),
            b: IntExpr::gen(rng, &cols(), 1),
            input: bx(gen_query(rng, d)),
        },
        1 => NrcQuery::Filter(Pred::gen(rng, &cols(), &[], 1), bx(gen_query(rng, d))),
        _ => NrcQuery::Union(bx(gen_query(rng, d)), bx(gen_query(rng, d))),
    }
}

pub fn gen_top(rng: &mut impl Rng) -> NrcTop {
    let q = gen_query(rng, 3);
    match rng.gen_range(0..5) {
        0 => NrcTop::Product(q, gen_query(rng, 1)),
        1 => NrcTop::SumBy { key: Some(IntExpr::gen(rng, &cols(), 1)), value: IntExpr::gen(rng, &cols(), 1), input: q },
        2 => NrcTop::SumBy { key: None, value: IntExpr::gen(rng, &cols(), 1), input: q },
        3 => NrcTop::GroupBy { key: IntExpr::gen(rng, &cols(), 1), input: q },
        _ => NrcTop::Bag(q),
    }
}

fn prim(src: &str) -> Nrc {
    Nrc::Prim(parse_body(src))
}

impl NrcQuery {
    pub fn to_nrc(&self) -> Nrc {
        match self {
            NrcQuery::Base(n) => Nrc::var(n),
            NrcQuery::Map { p, a, b, input } => {
                let elem = prim(&format!("<a = {}, b = {}>", a.render("x"), b.render("x")));
                Nrc::for_union("x", input.to_nrc(), Nrc::if_then(parse_body(&p.render("x")), Nrc::sng(elem)))
            }
            NrcQuery::Filter(p, input) => {
                let inner = Nrc::if_then(parse_body(&p.render("x")), Nrc::sng(Nrc::var("x")));
                Nrc::flatten(Nrc::for_union("x", input.to_nrc(), Nrc::sng(inner)))
            }
            NrcQuery::Union(x, y) => Nrc::union(x.to_nrc(), y.to_nrc()),
        }
    }

    pub fn eval(&self, db: &NrcDb) -> Bag {
        match self {
            NrcQuery::Base(n) => if *n == "B1" { &db.b1 } else { &db.b2 }.clone(),
            NrcQuery::Map { p, a, b, input } => {
                let mut out = Bag::new();
                for (r, m) in input.eval(db).into_iter().filter(|(r, _)| p.eval(r)) {
                    *out.entry(row(a.eval(&r), b.eval(&r))).or_default() += m;
                }
                out
            }
            NrcQuery::Filter(p, input) => input.eval(db).into_iter().filter(|(r, _)| p.eval(r)).collect(),
            NrcQuery::Union(x, y) => {
                let mut out = x.eval(db);
                for (r, m) in y.eval(db) {
                    *out.entry(r).or_default() += m;
                }
                out
            }
        }
    }
}

impl NrcTop {
    pub fn to_nrc(&self) -> Nrc {
        let f = |e: &IntExpr| RowFn::new("x", parse_body(&e.render("x")));
        match self {
            NrcTop::Bag(q) => q.to_nrc(),
            NrcTop::Product(x, y) => Nrc::product(x.to_nrc(), y.to_nrc()),
            NrcTop::SumBy { key, value, input } => {
                Nrc::SumBy { keys: key.as_ref().map(f), value: f(value), input: bx(input.to_nrc()) }
            }
            NrcTop::GroupBy { key, input } => Nrc::GroupBy { keys: f(key), input: bx(input.to_nrc()) },
        }
    }

    /// Bags map elements to multiplicities. `sumBy` and `groupBy` yield one
    /// `<key, val>` row of multiplicity one per group; `sumBy` drops groups
    /// whose weighted sum is zero.
    pub fn eval(&self, db: &NrcDb) -> Value {
        match self {
            NrcTop::Bag(q) => bag_value(&q.eval(db)),
            NrcTop::Product(x, y) => {
                let (xs, ys) = (x.eval(db), y.eval(db));
                let pairs = xs.iter().flat_map(|(p, m)| {
                    ys.iter().map(move |(q, n)| {
                        (Value::record([("fst", p.clone()), ("snd", q.clone())]), Value::Int(m * n))
                    })
                });
                Value::dict(pairs.collect::<Vec<_>>()).unwrap()
            }
            NrcTop::SumBy { key, value, input } => {
                let bag = input.eval(db);
                let weighted = |rows: &mut dyn Iterator<Item = (&Value, &i64)>| {
                    rows.map(|(r, m)| m.wrapping_mul(value.eval(r))).fold(0i64, i64::wrapping_add)
                };
                match key {
                    None => Value::Int(weighted(&mut bag.iter())),
                    Some(k) => {
                        let mut groups: BTreeMap<i64, Vec<(&Value, &i64)>> = BTreeMap::new();
                        for (r, m) in &bag {
                            groups.entry(k.eval(r)).or_default().push((r, m));
                        }
                        let rows = groups.into_iter().filter_map(|(g, rs)| {
                            let s = weighted(&mut rs.into_iter());
                            (s != 0).then(|| (Value::record([("key", Value::Int(g)), ("val", Value::Int(s))]), Value::Int(1)))
                        });
                        Value::dict(rows.collect::<Vec<_>>()).unwrap()
                    }
                }
            }
            NrcTop::GroupBy { key, input } => {
                let mut groups: BTreeMap<i64, Bag> = BTreeMap::new();
                for (r, m) in input.eval(db) {
                    groups.entry(key.eval(&r)).or_default().insert(r, m);
                }
                let rows = groups
                    .into_iter()
                    .map(|(g, b)| (Value::record([("key", Value::Int(g)), ("val", bag_value(&b))]), Value::Int(1)));
                Value::dict(rows.collect::<Vec<_>>()).unwrap()
            }
        }
    }
}
