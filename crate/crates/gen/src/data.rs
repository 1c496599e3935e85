//! Relations, sparse tensors and gene/variant fixtures.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use sdql_core::{Type, Value};

/// Domain of one generated column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Integers in `0..n`.
    Int(i64),
    /// One of the first `n` names `s0, s1, ...`.
    Str(usize),
    /// Halves in `[-n, n]`.
    Real(i64),
}

impl Domain {
    pub fn ty(self) -> Type {
        match self {
            Domain::Int(_) => Type::INT,
            Domain::Str(_) => Type::STRING,
            Domain::Real(_) => Type::REAL,
        }
    }

    fn draw(self, rng: &mut impl Rng) -> Value {
        match self {
            Domain::Int(n) => Value::Int(rng.gen_range(0..n)),
            Domain::Str(n) => Value::str(&format!("s{}", rng.gen_range(0..n))),
            Domain::Real(n) => Value::Real(rng.gen_range(-2 * n..=2 * n) as f64 / 2.0),
        }
    }
}

/// The record type of rows with the given columns.
pub fn row_type(cols: &[(&str, Domain)]) -> Type {
    Type::record(cols.iter().map(|(n, d)| (*n, d.ty())))
}

/// `n` rows drawn independently; duplicates are possible.
pub fn rows(rng: &mut impl Rng, cols: &[(&str, Domain)], n: usize) -> Vec<Value> {
    (0..n).map(|_| Value::record(cols.iter().map(|(c, d)| (*c, d.draw(rng))))).collect()
}

/// A set relation `{ row -> true }`.
pub fn set_of(rows: &[Value]) -> Value {
    Value::set(rows.iter().cloned())
}

/// A bag relation `{ row -> multiplicity }`.
pub fn bag_of(rows: &[Value]) -> Value {
    Value::dict(rows.iter().map(|r| (r.clone(), Value::Int(1)))).expect("int multiplicities")
}

/// Stored entries `(row, col, value)` of a sparse matrix, in row-major
/// order, with values in `1..=9`. Each cell is present with probability
/// `density`.
pub fn sparse_matrix(rng: &mut impl Rng, rows: i64, cols: i64, density: f64) -> Vec<(i64, i64, i64)> {
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if rng.gen_bool(density) {
                out.push((r, c, rng.gen_range(1..=9)));
            }
        }
    }
    out
}

/// Stored entries of a sparse vector with values in `1..=9`.
pub fn sparse_vector(rng: &mut impl Rng, len: i64, density: f64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for i in 0..len {
        if rng.gen_bool(density) {
            out.push((i, rng.gen_range(1..=9)));
        }
    }
    out
}

pub fn vector_value(entries: &[(i64, i64)]) -> Value {
    Value::dict(entries.iter().map(|&(i, x)| (Value::Int(i), Value::Int(x)))).expect("int entries")
}

/// `{ <row, col> -> x }`.
pub fn flat_matrix(entries: &[(i64, i64, i64)]) -> Value {
    Value::dict(
        entries
            .iter()
            .map(|&(r, c, x)| (Value::record([("row", Value::Int(r)), ("col", Value::Int(c))]), Value::Int(x))),
    )
    .expect("int entries")
}

/// `{ row -> { col -> x } }`.
pub fn curried_matrix(entries: &[(i64, i64, i64)]) -> Value {
    let rows: BTreeSet<i64> = entries.iter().map(|e| e.0).collect();
    Value::dict(rows.into_iter().map(|r| {
        let row = entries.iter().filter(|e| e.0 == r).map(|&(_, c, x)| (Value::Int(c), Value::Int(x)));
        (Value::Int(r), Value::dict(row).expect("int entries"))
    }))
    .expect("int entries")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gene {
    pub name: String,
    pub desc: String,
    pub contig: i64,
    pub start: i64,
    pub end: i64,
    pub gid: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub contig: i64,
    pub start: i64,
    pub reference: String,
    pub alternate: String,
    /// `(sample, call)` per sample; each sample appears once.
    pub genotypes: Vec<(String, i64)>,
}

/// A genes table and a nested variants table over a few contigs.
#[derive(Debug, Clone, PartialEq)]
pub struct GmbData {
    pub genes: Vec<Gene>,
    pub variants: Vec<Variant>,
}

pub const GENES_SCHEMA: &str = "name: string, desc: string, contig: int, start: int, end: int, gid: string";
pub const VARIANTS_SCHEMA: &str =
    "contig: int, start: int, reference: string, alternate: string, genotypes: { <sample: string, call: real> -> int }";

impl GmbData {
    /// Genes have distinct names and may overlap; every variant carries a
    /// call (0, 1 or 2) for every sample.
    pub fn generate(rng: &mut impl Rng, variants: usize, genes: usize, samples: usize) -> GmbData {
        const SPAN: i64 = 20_000;
        let genes = (0..genes)
            .map(|i| {
                let start = rng.gen_range(0..SPAN);
                Gene {
                    name: format!("G{i}"),
                    desc: format!("gene {i}"),
                    contig: rng.gen_range(1..=3),
                    start,
                    end: start + rng.gen_range(500..4000),
                    gid: format!("ENSG{i:08}"),
                }
            })
            .collect();
        let bases = ["A", "C", "G", "T"];
        let variants = (0..variants)
            .map(|_| Variant {
                contig: rng.gen_range(1..=3),
                start: rng.gen_range(0..SPAN + 4000),
                reference: bases.choose(rng).unwrap().to_string(),
                alternate: bases.choose(rng).unwrap().to_string(),
                genotypes: (0..samples).map(|s| (format!("S{s:02}"), rng.gen_range(0..=2))).collect(),
            })
            .collect();
        GmbData { genes, variants }
    }

    /// The genes table as CSV with a header row.
    pub fn genes_csv(&self) -> String {
        let mut out = String::from("name,desc,contig,start,end,gid\n");
        for g in &self.genes {
            writeln!(out, "{},{},{},{},{},{}", g.name, g.desc, g.contig, g.start, g.end, g.gid).unwrap();
        }
        out
    }

    /// The variants table in the nested row format, one record per line.
    pub fn variants_rows(&self) -> String {
        let mut out = String::new();
        for v in &self.variants {
            let gts: Vec<String> =
                v.genotypes.iter().map(|(s, c)| format!("<sample=\"{s}\", call={c}.0> -> 1")).collect();
            writeln!(
                out,
                "<contig={}, start={}, reference=\"{}\", alternate=\"{}\", genotypes={{ {} }}>",
                v.contig,
                v.start,
                v.reference,
                v.alternate,
                gts.join(", ")
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn matrix_density() {
        let m = sparse_matrix(&mut rng(1), 64, 64, 0.05);
        assert!(m.len() > 100 && m.len() < 320, "{}", m.len());
        assert_eq!(flat_matrix(&m).as_dict().unwrap().len(), m.len());
        let c = curried_matrix(&m);
        let stored: usize = c.as_dict().unwrap().entries().map(|(_, r)| r.as_dict().unwrap().len()).sum();
        assert_eq!(stored, m.len());
    }

    #[test]
    fn gmb_shapes() {
        let d = GmbData::generate(&mut rng(2), 100, 20, 10);
        assert_eq!(d.genes_csv().lines().count(), 21);
        assert_eq!(d.variants_rows().lines().count(), 100);
        assert!(d.variants.iter().all(|v| v.genotypes.len() == 10));
    }
}
