//! Values and types. Numbers are small integers or halves so that sums and
//! products of a few of them are exact in `f64`.

use rand::seq::SliceRandom;
use rand::Rng;
use sdql_core::semiring::{tagged_zero, zero_of};
use sdql_core::{ScalarType, TaggedKind, Type, Value};

const STRINGS: [&str; 3] = ["a", "b", "c"];

/// Every scalar kind that carries a semiring.
pub fn scalar_kinds() -> Vec<ScalarType> {
    let mut out = vec![ScalarType::Bool, ScalarType::Int, ScalarType::Nat, ScalarType::Real];
    out.extend(TaggedKind::ALL.map(ScalarType::Tagged));
    out
}

fn half(rng: &mut impl Rng, lo: i32, hi: i32) -> f64 {
    rng.gen_range(lo * 2..=hi * 2) as f64 / 2.0
}

/// A scalar of kind `s`; about one draw in five is the zero of `s`.
pub fn scalar_value(rng: &mut impl Rng, s: ScalarType) -> Value {
    if rng.gen_ratio(1, 5) && s != ScalarType::Str {
        return zero_of(&Type::Scalar(s)).expect("semiring scalar");
    }
    match s {
        ScalarType::Bool => Value::Bool(rng.gen()),
        ScalarType::Int => Value::Int(rng.gen_range(-5..=5)),
        ScalarType::Nat => Value::Nat(rng.gen_range(0..=6)),
        ScalarType::Real => Value::Real(half(rng, -4, 4)),
        ScalarType::Str => Value::str(STRINGS.choose(rng).unwrap()),
        ScalarType::Tagged(k) => Value::Tagged(k, tagged_payload(rng, k)),
    }
}

fn tagged_payload(rng: &mut impl Rng, k: TaggedKind) -> f64 {
    let x = match k {
        TaggedKind::MinProd => half(rng, 1, 4),
        TaggedKind::MaxProd => half(rng, 0, 4),
        TaggedKind::MinSum | TaggedKind::MaxSum => half(rng, -4, 4),
        TaggedKind::MaxMin => match rng.gen_range(0..6) {
            0 => f64::INFINITY,
            1 => tagged_zero(k),
            _ => half(rng, -4, 4),
        },
    };
    debug_assert!(k.in_domain(x));
    x
}

/// A dictionary key type: `int`, `string`, or `<a: int, b: string>`.
pub fn key_type(rng: &mut impl Rng) -> Type {
    match rng.gen_range(0..3) {
        0 => Type::INT,
        1 => Type::STRING,
        _ => Type::record([("a", Type::INT), ("b", Type::STRING)]),
    }
}

/// A semiring type of nesting depth at most `depth` whose leaves are all
/// `leaf`.
pub fn semiring_type(rng: &mut impl Rng, leaf: ScalarType, depth: u32) -> Type {
    if depth == 0 {
        return Type::Scalar(leaf);
    }
    match rng.gen_range(0..4) {
        0 => Type::Scalar(leaf),
        1 => Type::record([
            ("p", semiring_type(rng, leaf, depth - 1)),
            ("q", semiring_type(rng, leaf, depth - 1)),
        ]),
        _ => Type::dict(key_type(rng), semiring_type(rng, leaf, depth - 1)),
    }
}

fn key_value(rng: &mut impl Rng, t: &Type) -> Value {
    match t {
        Type::Scalar(ScalarType::Int) => Value::Int(rng.gen_range(0..4)),
        Type::Scalar(ScalarType::Str) => Value::str(STRINGS.choose(rng).unwrap()),
        Type::Record(fs) => Value::record(fs.iter().map(|(n, t)| (n.clone(), key_value(rng, t)))),
        other => value_of_type(rng, other),
    }
}

/// A canonical value of type `t` (hash layout only); dictionaries have at
/// most three entries.
pub fn value_of_type(rng: &mut impl Rng, t: &Type) -> Value {
    match t {
        Type::Scalar(s) => scalar_value(rng, *s),
        Type::Record(fs) => Value::record(fs.iter().map(|(n, t)| (n.clone(), value_of_type(rng, t)))),
        Type::Dict { key, val, .. } => {
            let n = rng.gen_range(0..=3);
            let entries: Vec<_> = (0..n).map(|_| (key_value(rng, key), value_of_type(rng, val))).collect();
            if val.is_semiring() {
                Value::dict(entries).expect("entries of one type")
            } else {
                Value::set(entries.into_iter().map(|(k, _)| k))
            }
        }
    }
}
