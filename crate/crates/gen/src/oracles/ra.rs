//! Random relational algebra queries over `R(a, b, s)` and `S(c, d)`.
//! Projections on either side only introduce names from that side's pool,
//! so products and joins never clash.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use sdql_core::front::{AggKind, Ra, RowFn};
use sdql_core::interp::Environment;
use sdql_core::parse::parse_type;
use sdql_core::{TaggedKind, Value};

use super::{parse_body, IntExpr, Pred};
use crate::data::{rows, set_of, Domain};

const R_COLS: [(&str, Domain); 3] = [("a", Domain::Int(5)), ("b", Domain::Int(5)), ("s", Domain::Str(3))];
const S_COLS: [(&str, Domain); 2] = [("c", Domain::Int(5)), ("d", Domain::Int(5))];

/// Fresh int column names a projection may introduce, per namespace.
const POOLS: [[&str; 4]; 3] = [["a", "b", "e", "f"], ["c", "d", "g", "h"], ["a", "c", "e", "g"]];

/// Columns of an intermediate result, in row order, flagged when int.
type Schema = Vec<(String, bool)>;

fn ints(s: &Schema) -> Vec<String> {
    s.iter().filter(|c| c.1).map(|c| c.0.clone()).collect()
}

fn strs(s: &Schema) -> Vec<String> {
    s.iter().filter(|c| !c.1).map(|c| c.0.clone()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Int(IntExpr),
    Copy(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RaQuery {
    Scan(&'static str),
    Select(Pred, Box<RaQuery>),
    Project(Vec<(String, Item)>, Box<RaQuery>),
    Union(Box<RaQuery>, Box<RaQuery>),
    Intersect(Box<RaQuery>, Box<RaQuery>),
    Difference(Box<RaQuery>, Box<RaQuery>),
    Product(Box<RaQuery>, Box<RaQuery>),
    Join(Pred, Box<RaQuery>, Box<RaQuery>),
}

/// A relation-valued query, or an aggregate on top of one.
#[derive(Debug, Clone, PartialEq)]
pub enum RaTop {
    Rel(RaQuery),
    Group { key: IntExpr, agg: AggKind, f: Option<IntExpr>, input: RaQuery },
    Scalar { agg: AggKind, f: Option<IntExpr>, input: RaQuery },
}

/// Contents of `R` and `S`.
#[derive(Debug, Clone)]
pub struct RaDb {
    pub r: Vec<Value>,
    pub s: Vec<Value>,
}

impl RaDb {
    pub fn generate(rng: &mut impl Rng) -> RaDb {
        let (nr, ns) = (rng.gen_range(0..9), rng.gen_range(0..9));
        RaDb { r: rows(rng, &R_COLS, nr), s: rows(rng, &S_COLS, ns) }
    }

    pub fn env(&self) -> Environment {
        let mut env = Environment::new();
        let rt = parse_type("{ <a: int, b: int, s: string> -> bool }").unwrap();
        env.bind("R", set_of(&self.r), rt);
        env.bind("S", set_of(&self.s), parse_type("{ <c: int, d: int> -> bool }").unwrap());
        env
    }
}

fn b<T>(x: T) -> Box<T> {
    Box::new(x)
}

fn base(side: usize) -> (RaQuery, Schema) {
    let cols: &[(&str, Domain)] = if side == 0 { &R_COLS } else { &S_COLS };
    let schema = cols.iter().map(|(n, d)| (n.to_string(), matches!(d, Domain::Int(_)))).collect();
    (RaQuery::Scan(if side == 0 { "R" } else { "S" }), schema)
}

fn projection(rng: &mut impl Rng, side: usize, input: &Schema) -> Vec<(String, Item)> {
    let n = rng.gen_range(1..=3);
    let mut names: Vec<&str> = POOLS[side].to_vec();
    names.shuffle(rng);
    let is = ints(input);
    let mut items: Vec<(String, Item)> =
        names[..n].iter().map(|c| (c.to_string(), Item::Int(IntExpr::gen(rng, &is, 2)))).collect();
    if let (Some(s), true) = (strs(input).first(), rng.gen()) {
        items.insert(rng.gen_range(0..=items.len()), (s.clone(), Item::Copy(s.clone())));
    }
    items
}

/// A query over one side whose result has exactly the columns of `target`.
fn same_schema(rng: &mut impl Rng, side: usize, target: &Schema) -> RaQuery {
    let (mut q, s0) = base(side);
    if rng.gen() {
        q = RaQuery::Select(Pred::gen(rng, &ints(&s0), &strs(&s0), 1), b(q));
    }
    if *target == s0 && rng.gen() {
        return q;
    }
    let items = target
        .iter()
        .map(|(n, int)| {
            let item = if *int { Item::Int(IntExpr::gen(rng, &ints(&s0), 1)) } else { Item::Copy("s".into()) };
            (n.clone(), item)
        })
        .collect();
    RaQuery::Project(items, b(q))
}

fn schema_of_items(items: &[(String, Item)]) -> Schema {
    items.iter().map(|(n, it)| (n.clone(), matches!(it, Item::Int(_)))).collect()
}

/// A query over side 0 (`R`), side 1 (`S`) or, for side 2, over a product
/// or join of the two.
pub fn gen_query(rng: &mut impl Rng, side: usize, depth: u32) -> (RaQuery, Schema) {
    if side == 2 {
        let (l, ls) = gen_query(rng, 0, depth.saturating_sub(1));
        let (r, rs) = gen_query(rng, 1, depth.saturating_sub(1));
        let schema: Schema = ls.into_iter().chain(rs).collect();
        let q = if rng.gen() {
            RaQuery::Product(b(l), b(r))
        } else {
            RaQuery::Join(Pred::gen(rng, &ints(&schema), &strs(&schema), 1), b(l), b(r))
        };
        return match rng.gen_range(0..3) {
            0 => (RaQuery::Select(Pred::gen(rng, &ints(&schema), &strs(&schema), 1), b(q)), schema),
            1 => {
                let items = projection(rng, 2, &schema);
                (RaQuery::Project(items.clone(), b(q)), schema_of_items(&items))
            }
            _ => (q, schema),
        };
    }
    if depth == 0 || rng.gen_ratio(1, 5) {
        return base(side);
    }
    let d = depth - 1;
    let (q, s) = gen_query(rng, side, d);
    match rng.gen_range(0..5) {
        0 => (RaQuery::Select(Pred::gen(rng, &ints(&s), &strs(&s), 2), b(q)), s),
        1 => {
            let items = projection(rng, side, &s);
            (RaQuery::Project(items.clone(), b(q)), schema_of_items(&items))
        }
        k => {
            let q2 = if rng.gen() {
                RaQuery::Select(Pred::gen(rng, &ints(&s), &strs(&s), 1), b(q.clone()))
            } else {
                same_schema(rng, side, &s)
            };
            let (x, y) = if rng.gen() { (q, q2) } else { (q2, q) };
            let op = match k {
                2 => RaQuery::Union(b(x), b(y)),
                3 => RaQuery::Intersect(b(x), b(y)),
                _ => RaQuery::Difference(b(x), b(y)),
            };
            (op, s)
        }
    }
}

/// A random top-level query: a relation, a grouped aggregate or a scalar
/// aggregate.
pub fn gen_top(rng: &mut impl Rng) -> RaTop {
    let side = *[0, 0, 1, 2].choose(rng).unwrap();
    let (q, s) = gen_query(rng, side, 3);
    let agg = *[AggKind::Sum, AggKind::Count, AggKind::Max, AggKind::Min].choose(rng).unwrap();
    let is = ints(&s);
    let f = (agg != AggKind::Count).then(|| IntExpr::gen(rng, &is, 1));
    match rng.gen_range(0..4) {
        0 => RaTop::Group { key: IntExpr::gen(rng, &is, 1), agg, f, input: q },
        1 => RaTop::Scalar { agg, f, input: q },
        _ => RaTop::Rel(q),
    }
}

fn row_fn(src: String) -> RowFn {
    RowFn::new("r", parse_body(&src))
}

impl Item {
    fn render(&self) -> String {
        match self {
            Item::Int(e) => e.render("r"),
            Item::Copy(c) => format!("r.{c}"),
        }
    }
}

impl RaQuery {
    pub fn to_ra(&self) -> Ra {
        match self {
            RaQuery::Scan(n) => Ra::scan(n),
            RaQuery::Select(p, q) => Ra::select(row_fn(p.render("r")), q.to_ra()),
            RaQuery::Project(items, q) => {
                let fs: Vec<String> = items.iter().map(|(n, it)| format!("{n} = {}", it.render())).collect();
                Ra::project(row_fn(format!("<{}>", fs.join(", "))), q.to_ra())
            }
            RaQuery::Union(x, y) => Ra::union(x.to_ra(), y.to_ra()),
            RaQuery::Intersect(x, y) => Ra::intersect(x.to_ra(), y.to_ra()),
            RaQuery::Difference(x, y) => Ra::difference(x.to_ra(), y.to_ra()),
            RaQuery::Product(x, y) => Ra::product(x.to_ra(), y.to_ra()),
            RaQuery::Join(p, x, y) => Ra::join(row_fn(p.render("r")), x.to_ra(), y.to_ra()),
        }
    }

    pub fn eval(&self, db: &RaDb) -> BTreeSet<Value> {
        match self {
            RaQuery::Scan(n) => (if *n == "R" { &db.r } else { &db.s }).iter().cloned().collect(),
            RaQuery::Select(p, q) => q.eval(db).into_iter().filter(|r| p.eval(r)).collect(),
            RaQuery::Project(items, q) => q
                .eval(db)
                .into_iter()
                .map(|r| {
                    Value::record(items.iter().map(|(n, it)| {
                        let v = match it {
                            Item::Int(e) => Value::Int(e.eval(&r)),
                            Item::Copy(c) => r.field(c).unwrap().clone(),
                        };
                        (n.as_str(), v)
                    }))
                })
                .collect(),
            RaQuery::Union(x, y) => x.eval(db).union(&y.eval(db)).cloned().collect(),
            RaQuery::Intersect(x, y) => x.eval(db).intersection(&y.eval(db)).cloned().collect(),
            RaQuery::Difference(x, y) => x.eval(db).difference(&y.eval(db)).cloned().collect(),
            RaQuery::Product(x, y) => product(&x.eval(db), &y.eval(db)),
            RaQuery::Join(p, x, y) => product(&x.eval(db), &y.eval(db)).into_iter().filter(|r| p.eval(r)).collect(),
        }
    }
}

fn product(xs: &BTreeSet<Value>, ys: &BTreeSet<Value>) -> BTreeSet<Value> {
    let mut out = BTreeSet::new();
    for x in xs {
        for y in ys {
            let fs = x.as_record().unwrap().iter().chain(y.as_record().unwrap()).cloned();
            out.insert(Value::record(fs));
        }
    }
    out
}

/// Fold one group's contributions. Sum and count yield ints; max and min
/// yield reals, and an empty fold gives the tagged zero.
fn fold(agg: AggKind, f: Option<&IntExpr>, rows: &[&Value]) -> Value {
    let vals = rows.iter().map(|r| f.map_or(1, |f| f.eval(r)));
    match agg {
        AggKind::Sum | AggKind::Count => Value::Int(vals.fold(0i64, i64::wrapping_add)),
        AggKind::Max => Value::Real(vals.map(|v| v as f64).fold(f64::NEG_INFINITY, f64::max)),
        AggKind::Min => Value::Real(vals.map(|v| v as f64).fold(f64::INFINITY, f64::min)),
    }
}

fn tag(agg: AggKind) -> Option<TaggedKind> {
    match agg {
        AggKind::Max => Some(TaggedKind::MaxSum),
        AggKind::Min => Some(TaggedKind::MinSum),
        _ => None,
    }
}

impl RaTop {
    pub fn to_ra(&self) -> Ra {
        let f = |f: &Option<IntExpr>| f.as_ref().map(|f| row_fn(f.render("r")));
        match self {
            RaTop::Rel(q) => q.to_ra(),
            RaTop::Group { key, agg, f: fx, input } => Ra::GroupAgg {
                keys: Some(row_fn(key.render("r"))),
                agg: *agg,
                f: f(fx),
                input: b(input.to_ra()),
            },
            RaTop::Scalar { agg, f: fx, input } => Ra::GroupAgg { keys: None, agg: *agg, f: f(fx), input: b(input.to_ra()) },
        }
    }

    /// Relations are sets `{ row -> true }`. A grouped aggregate is a bag of
    /// `<key, val>` rows, one per group whose aggregate is not the zero of
    /// its semiring.
    pub fn eval(&self, db: &RaDb) -> Value {
        match self {
            RaTop::Rel(q) => Value::set(q.eval(db)),
            RaTop::Group { key, agg, f, input } => {
                let rows = input.eval(db);
                let mut groups: BTreeMap<i64, Vec<&Value>> = BTreeMap::new();
                for r in &rows {
                    groups.entry(key.eval(r)).or_default().push(r);
                }
                let out = groups.into_iter().filter_map(|(k, rs)| {
                    let v = fold(*agg, f.as_ref(), &rs);
                    let zero = tag(*agg).is_none() && v == Value::Int(0);
                    (!zero).then(|| (Value::record([("key", Value::Int(k)), ("val", v)]), Value::Int(1)))
                });
                Value::dict(out.collect::<Vec<_>>()).expect("int multiplicities")
            }
            RaTop::Scalar { agg, f, input } => {
                let rows = input.eval(db);
                fold(*agg, f.as_ref(), &rows.iter().collect::<Vec<_>>())
            }
        }
    }
}
