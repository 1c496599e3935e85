//! Physical encodings of matrices and relations, conversions between them,
//! and adapters that retarget a query written against the dictionary
//! encoding of a relation to its row or columnar encoding.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use super::FrontendError;
use crate::syntax::{field, key_of, lookup, record, subst_proj, val_of, var, Expr};
use crate::value::Dict;
use crate::{Name, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelLayout {
    /// `{ <row: int, col: int> -> S }`.
    FlatMatrix,
    /// `{ int -> { int -> S } }`.
    CurriedMatrix,
    /// `{ row -> int }`.
    Bag,
    /// `{ row -> bool }`.
    Set,
    /// Nested dictionaries keyed by the listed attributes in order, holding
    /// the multiplicity at the leaves.
    Factorized(Vec<Name>),
    /// `[| row |]`, for relations without duplicates.
    Row,
    /// `< a1 = [| A1 |], ..., an = [| An |] >`.
    Columnar,
}

impl fmt::Display for RelLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelLayout::FlatMatrix => f.write_str("flat"),
            RelLayout::CurriedMatrix => f.write_str("curried"),
            RelLayout::Bag => f.write_str("dict"),
            RelLayout::Set => f.write_str("set"),
            RelLayout::Factorized(order) => {
                let names: Vec<&str> = order.iter().map(|n| &**n).collect();
                write!(f, "factorized({})", names.join(","))
            }
            RelLayout::Row => f.write_str("row"),
            RelLayout::Columnar => f.write_str("columnar"),
        }
    }
}

impl core::str::FromStr for RelLayout {
    type Err = FrontendError;

    fn from_str(s: &str) -> Result<Self, FrontendError> {
        Ok(match s {
            "flat" => RelLayout::FlatMatrix,
            "curried" => RelLayout::CurriedMatrix,
            "dict" | "bag" => RelLayout::Bag,
            "set" => RelLayout::Set,
            "row" => RelLayout::Row,
            "columnar" => RelLayout::Columnar,
            _ => match s.strip_prefix("factorized(").and_then(|r| r.strip_suffix(')')) {
                Some(list) => RelLayout::Factorized(list.split(',').map(|n| Name::from(n.trim())).collect()),
                None => return Err(FrontendError::new("layout-mismatch", format!("unknown layout `{s}`"))),
            },
        })
    }
}

fn shape_err(layout: &RelLayout, what: impl fmt::Display) -> FrontendError {
    FrontendError::new("layout-mismatch", format!("value is not a {layout} encoding: {what}"))
}

fn dict_of<'a>(v: &'a Value, layout: &RelLayout) -> Result<&'a Dict, FrontendError> {
    v.as_dict().ok_or_else(|| shape_err(layout, "expected a dictionary"))
}

/// Re-encode `v` from `source` to `target`. Matrix layouts convert only to
/// each other; relation layouts convert among themselves.
pub fn convert_layout(v: &Value, source: &RelLayout, target: &RelLayout) -> Result<Value, FrontendError> {
    use RelLayout::*;
    if source == target {
        return Ok(v.clone());
    }
    match (source, target) {
        (FlatMatrix, CurriedMatrix) => flat_to_curried(v),
        (CurriedMatrix, FlatMatrix) => curried_to_flat(v),
        (FlatMatrix | CurriedMatrix, _) | (_, FlatMatrix | CurriedMatrix) => Err(FrontendError::new(
            "layout-mismatch",
            format!("no conversion from {source} to {target}"),
        )),
        _ => {
            let rows = to_rows(v, source)?;
            from_rows(rows, target)
        }
    }
}

fn flat_to_curried(v: &Value) -> Result<Value, FrontendError> {
    let mut rows: BTreeMap<Value, Vec<(Value, Value)>> = BTreeMap::new();
    for (k, x) in dict_of(v, &RelLayout::FlatMatrix)?.entries() {
        let (Some(r), Some(c)) = (k.field("row"), k.field("col")) else {
            return Err(shape_err(&RelLayout::FlatMatrix, "keys need row and col"));
        };
        rows.entry(r.clone()).or_default().push((c.clone(), x.clone()));
    }
    let outer = rows
        .into_iter()
        .map(|(r, cols)| Ok((r, Value::dict(cols).map_err(|e| shape_err(&RelLayout::FlatMatrix, e))?)))
        .collect::<Result<Vec<_>, FrontendError>>()?;
    Value::dict(outer).map_err(|e| shape_err(&RelLayout::FlatMatrix, e))
}

fn curried_to_flat(v: &Value) -> Result<Value, FrontendError> {
    let mut out = Vec::new();
    for (r, row) in dict_of(v, &RelLayout::CurriedMatrix)?.entries() {
        for (c, x) in dict_of(row, &RelLayout::CurriedMatrix)?.entries() {
            out.push((Value::record([("row", r.clone()), ("col", c)]), x.clone()));
        }
    }
    Value::dict(out).map_err(|e| shape_err(&RelLayout::CurriedMatrix, e))
}

/// Decode a relation into `(row, multiplicity)` pairs in row order.
fn to_rows(v: &Value, layout: &RelLayout) -> Result<Vec<(Value, Value)>, FrontendError> {
    match layout {
        RelLayout::Bag | RelLayout::Set => Ok(dict_of(v, layout)?.entries().map(|(k, m)| (k, m.clone())).collect()),
        RelLayout::Factorized(order) => {
            let mut out = Vec::new();
            unnest(v, order, &mut Vec::new(), &mut out, layout)?;
            Ok(out)
        }
        RelLayout::Row => Ok(dense_items(v, layout)?.into_iter().map(|r| (r, Value::Int(1))).collect()),
        RelLayout::Columnar => {
            let cols = v.as_record().ok_or_else(|| shape_err(layout, "expected a record of arrays"))?;
            let cols = cols
                .iter()
                .map(|(n, c)| Ok((n.clone(), dense_items(c, layout)?)))
                .collect::<Result<Vec<_>, FrontendError>>()?;
            let len = cols.first().map_or(0, |(_, c)| c.len());
            if cols.iter().any(|(_, c)| c.len() != len) {
                return Err(shape_err(layout, "columns differ in length"));
            }
            Ok((0..len)
                .map(|i| (Value::record(cols.iter().map(|(n, c)| (n.clone(), c[i].clone()))), Value::Int(1)))
                .collect())
        }
        RelLayout::FlatMatrix | RelLayout::CurriedMatrix => unreachable!("matrix layouts are handled separately"),
    }
}

/// Items of an array: a dense dictionary, or a hash dictionary whose keys
/// are exactly `0..n`.
fn dense_items(v: &Value, layout: &RelLayout) -> Result<Vec<Value>, FrontendError> {
    match dict_of(v, layout)? {
        Dict::Dense(items) => Ok(items.clone()),
        Dict::Hash(m) => m
            .iter()
            .enumerate()
            .map(|(i, (k, x))| match k {
                Value::Int(j) if *j == i as i64 => Ok(x.clone()),
                _ => Err(FrontendError::new("dense-key-violation", format!("array keys must be 0..{}, found {k}", m.len()))),
            })
            .collect(),
    }
}

fn unnest(
    v: &Value,
    order: &[Name],
    prefix: &mut Vec<(Name, Value)>,
    out: &mut Vec<(Value, Value)>,
    layout: &RelLayout,
) -> Result<(), FrontendError> {
    let Some((attr, rest)) = order.split_first() else {
        out.push((Value::record(prefix.iter().cloned()), v.clone()));
        return Ok(());
    };
    for (k, inner) in dict_of(v, layout)?.entries() {
        prefix.push((attr.clone(), k));
        unnest(inner, rest, prefix, out, layout)?;
        prefix.pop();
    }
    Ok(())
}

fn from_rows(rows: Vec<(Value, Value)>, layout: &RelLayout) -> Result<Value, FrontendError> {
    let dict = |entries: Vec<(Value, Value)>| Value::dict(entries).map_err(|e| shape_err(layout, e));
    match layout {
        RelLayout::Bag => dict(rows.into_iter().map(|(r, m)| (r, as_count(m))).collect()),
        RelLayout::Set => dict(rows.into_iter().map(|(r, _)| (r, Value::Bool(true))).collect()),
        RelLayout::Factorized(order) => {
            let mut root = Vec::new();
            for (r, m) in rows {
                let fields = r.as_record().ok_or_else(|| shape_err(layout, "rows must be records"))?;
                if fields.len() != order.len() {
                    return Err(shape_err(layout, "attribute order must name every field"));
                }
                let path = order
                    .iter()
                    .map(|a| r.field(a).cloned().ok_or_else(|| shape_err(layout, format!("no attribute `{a}`"))))
                    .collect::<Result<Vec<_>, FrontendError>>()?;
                root.push((path, m));
            }
            nest(root, layout)
        }
        RelLayout::Row | RelLayout::Columnar => {
            let mut items = Vec::new();
            for (r, m) in rows {
                if !is_one(&m) {
                    return Err(FrontendError::new(
                        "row-multiplicity",
                        format!("row {r} has multiplicity {m}; row layouts hold each row once"),
                    ));
                }
                items.push(r);
            }
            if *layout == RelLayout::Row {
                return Ok(Value::array(items));
            }
            let names: Vec<Name> = match items.first().and_then(|r| r.as_record()) {
                Some(fs) => fs.iter().map(|(n, _)| n.clone()).collect(),
                None if items.is_empty() => Vec::new(),
                None => return Err(shape_err(layout, "rows must be records")),
            };
            let cols = names
                .iter()
                .map(|n| {
                    let col = items
                        .iter()
                        .map(|r| r.field(n).cloned().ok_or_else(|| shape_err(layout, format!("row lacks `{n}`"))))
                        .collect::<Result<Vec<_>, FrontendError>>()?;
                    Ok((n.clone(), Value::array(col)))
                })
                .collect::<Result<Vec<_>, FrontendError>>()?;
            Ok(Value::record(cols))
        }
        RelLayout::FlatMatrix | RelLayout::CurriedMatrix => unreachable!("matrix layouts are handled separately"),
    }
}

fn is_one(m: &Value) -> bool {
    matches!(m, Value::Int(1) | Value::Bool(true) | Value::Nat(1))
}

fn as_count(m: Value) -> Value {
    match m {
        Value::Bool(true) => Value::Int(1),
        other => other,
    }
}

fn nest(rows: Vec<(Vec<Value>, Value)>, layout: &RelLayout) -> Result<Value, FrontendError> {
    if rows.first().is_some_and(|(p, _)| p.is_empty()) {
        return Ok(rows.into_iter().next().map(|(_, m)| m).expect("non-empty"));
    }
    let mut groups: BTreeMap<Value, Vec<(Vec<Value>, Value)>> = BTreeMap::new();
    for (mut path, m) in rows {
        let head = path.remove(0);
        groups.entry(head).or_default().push((path, m));
    }
    let entries = groups
        .into_iter()
        .map(|(k, g)| Ok((k, nest(g, layout)?)))
        .collect::<Result<Vec<_>, FrontendError>>()?;
    Value::dict(entries).map_err(|e| shape_err(layout, e))
}

/// Retarget `q`, written against `rel` as `{ row -> mult }`, to the row
/// layout `[| row |]`: each `sum(x in rel)` now reads the row from `x.val`
/// and sees the constant multiplicity `one`.
pub fn to_row_query(q: &Expr, rel: &str, one: &Expr) -> Result<Expr, FrontendError> {
    retarget(q, rel, &mut |x, body| {
        let body = subst_proj(body.clone(), x, &val_of(x), one);
        Ok((x.into(), var(rel), body))
    })
}

/// Retarget `q`, written against `rel` as `{ row -> mult }`, to the
/// columnar layout: loops run over the index of the first column and each
/// `x.key.a` becomes the indexed column read `rel.a(i)`.
pub fn to_columnar_query(q: &Expr, rel: &str, fields: &[Name], one: &Expr) -> Result<Expr, FrontendError> {
    let first = fields
        .first()
        .ok_or_else(|| FrontendError::new("layout-mismatch", "a columnar relation needs at least one column"))?;
    retarget(q, rel, &mut |x, body| {
        let row = record(fields.iter().map(|f| (f.clone(), lookup(field(var(rel), f), key_of(x)))));
        let body = project_records(subst_proj(body.clone(), x, &row, one));
        Ok((x.into(), field(var(rel), first), body))
    })
}

type Retarget<'a> = dyn FnMut(&str, &Expr) -> Result<(Name, Expr, Expr), FrontendError> + 'a;

fn retarget(e: &Expr, rel: &str, f: &mut Retarget<'_>) -> Result<Expr, FrontendError> {
    match e {
        Expr::Sum { var: x, src, body, tag } if matches!(&**src, Expr::Var(n) if &**n == rel) => {
            let body = if &**x == rel { (**body).clone() } else { retarget(body, rel, f)? };
            let (i, src, body) = f(x, &body)?;
            Ok(Expr::Sum { var: i, src: alloc::boxed::Box::new(src), body: alloc::boxed::Box::new(body), tag: *tag })
        }
        Expr::Var(n) if &**n == rel => Err(FrontendError::new(
            "layout-mismatch",
            format!("`{rel}` is used other than as a loop source; cannot change its layout"),
        )),
        Expr::Sum { var: x, src, body, tag } if &**x == rel => Ok(Expr::Sum {
            var: x.clone(),
            src: alloc::boxed::Box::new(retarget(src, rel, f)?),
            body: body.clone(),
            tag: *tag,
        }),
        Expr::Let(x, e1, e2) if &**x == rel => {
            Ok(Expr::Let(x.clone(), alloc::boxed::Box::new(retarget(e1, rel, f)?), e2.clone()))
        }
        _ => {
            let mut err: Option<FrontendError> = None;
            let out = e.clone().map_children(&mut |c| match retarget(&c, rel, f) {
                Ok(c2) => c2,
                Err(x) => {
                    err.get_or_insert(x);
                    c
                }
            });
            match err {
                Some(x) => Err(x),
                None => Ok(out),
            }
        }
    }
}

/// Resolve `<..., a = e, ...>.a` to `e`.
fn project_records(e: Expr) -> Expr {
    let e = e.map_children(&mut project_records);
    match e {
        Expr::Field(inner, f) => match *inner {
            Expr::Record(fs) if fs.iter().any(|(n, _)| *n == f) => {
                fs.into_iter().find(|(n, _)| *n == f).map(|(_, x)| x).expect("field present")
            }
            other => Expr::Field(alloc::boxed::Box::new(other), f),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{eval, Environment};
    use crate::parse::{parse, parse_type, parse_value};
    use crate::pretty::pretty;
    use crate::value::values_equal;

    fn val(s: &str) -> Value {
        parse_value(s).unwrap()
    }

    const BAG: &str = r#"{ <A="a1", B="b1"> -> 1, <A="a1", B="b2"> -> 1, <A="a2", B="b3"> -> 1 }"#;

    #[test]
    fn matrices() {
        let flat = val("{ <row=0, col=0> -> 7, <row=0, col=3> -> 8, <row=1, col=1> -> 9 }");
        let cur = convert_layout(&flat, &RelLayout::FlatMatrix, &RelLayout::CurriedMatrix).unwrap();
        assert!(values_equal(&cur, &val("{ 0 -> { 0 -> 7, 3 -> 8 }, 1 -> { 1 -> 9 } }")));
        let back = convert_layout(&cur, &RelLayout::CurriedMatrix, &RelLayout::FlatMatrix).unwrap();
        assert!(values_equal(&back, &flat));
    }

    #[test]
    fn relation_layouts() {
        let bag = val(BAG);
        let order = RelLayout::Factorized(alloc::vec!["A".into(), "B".into()]);
        let fac = convert_layout(&bag, &RelLayout::Bag, &order).unwrap();
        assert!(values_equal(&fac, &val(r#"{ "a1" -> { "b1" -> 1, "b2" -> 1 }, "a2" -> { "b3" -> 1 } }"#)));
        let row = convert_layout(&bag, &RelLayout::Bag, &RelLayout::Row).unwrap();
        assert!(values_equal(&row, &val(r#"[| <A="a1", B="b1">, <A="a1", B="b2">, <A="a2", B="b3"> |]"#)));
        let col = convert_layout(&row, &RelLayout::Row, &RelLayout::Columnar).unwrap();
        assert!(values_equal(&col, &val(r#"<A = [| "a1", "a1", "a2" |], B = [| "b1", "b2", "b3" |]>"#)));
        for l in [&order, &RelLayout::Row, &RelLayout::Columnar] {
            let there = convert_layout(&bag, &RelLayout::Bag, l).unwrap();
            assert!(values_equal(&convert_layout(&there, l, &RelLayout::Bag).unwrap(), &bag), "{l}");
        }
    }

    #[test]
    fn conversion_errors() {
        let dup = val(r#"{ <A="a"> -> 2 }"#);
        assert_eq!(convert_layout(&dup, &RelLayout::Bag, &RelLayout::Row).unwrap_err().code, "row-multiplicity");
        let gappy = val(r#"{ 0 -> <A="a">, 2 -> <A="b"> }"#);
        assert_eq!(convert_layout(&gappy, &RelLayout::Row, &RelLayout::Bag).unwrap_err().code, "dense-key-violation");
    }

    #[test]
    fn query_adapters() {
        let bag = val(BAG);
        let q = parse(r#"sum(x in R) if (x.key.A == "a1") then { x.key.B -> x.val } else { }"#).unwrap();
        let row_q = to_row_query(&q, "R", &crate::syntax::int(1)).unwrap();
        assert_eq!(pretty(&row_q), r#"sum(x in R) if (x.val.A == "a1") then { x.val.B -> 1 } else { }"#);
        let fields: Vec<Name> = alloc::vec!["A".into(), "B".into()];
        let col_q = to_columnar_query(&q, "R", &fields, &crate::syntax::int(1)).unwrap();
        assert_eq!(pretty(&col_q), r#"sum(x in R.A) if (R.A(x.key) == "a1") then { R.B(x.key) -> 1 } else { }"#);

        let bt = parse_type("{ <A: string, B: string> -> int }").unwrap();
        let want = eval(&Environment::new().with("R", bag.clone(), bt), &q).unwrap();
        let row = convert_layout(&bag, &RelLayout::Bag, &RelLayout::Row).unwrap();
        let rt = parse_type("[| <A: string, B: string> |]").unwrap();
        assert!(values_equal(&eval(&Environment::new().with("R", row.clone(), rt), &row_q).unwrap(), &want));
        let col = convert_layout(&row, &RelLayout::Row, &RelLayout::Columnar).unwrap();
        let ct = parse_type("<A: [| string |], B: [| string |]>").unwrap();
        assert!(values_equal(&eval(&Environment::new().with("R", col, ct), &col_q).unwrap(), &want));

        let lookup_use = parse(r#"R(<A="a1", B="b1">)"#).unwrap();
        assert!(to_row_query(&lookup_use, "R", &crate::syntax::int(1)).is_err());
    }
}
