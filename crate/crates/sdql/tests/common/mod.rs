//! Golden programs shared by the integration tests and the acceptance
//! harness. Expected outputs are frozen canonical text.

#![allow(dead_code)]

use std::path::PathBuf;

use sdql::io::LoadSpec;
use sdql::session::{Flags, Session, SessionConfig, SessionError};
use sdql_core::opt::RewriteConfig;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub const GENES_SCHEMA: &str = "name: string, desc: string, contig: int, start: int, end: int, gid: string";
pub const VARIANTS_SCHEMA: &str =
    "contig: int, start: int, reference: string, alternate: string, genotypes: { <sample: string, call: real> -> int }";

/// `name=fixtures/file:format[:schema]`.
pub fn load(name: &str, file: &str, format: &str, schema: Option<&str>) -> LoadSpec {
    let path = fixture(file);
    let mut spec = format!("{name}={}:{format}", path.display());
    if let Some(s) = schema {
        spec.push(':');
        spec.push_str(s);
    }
    spec.parse().unwrap_or_else(|e| panic!("{spec}: {e}"))
}

#[derive(Clone, Copy, PartialEq)]
pub enum Data {
    None,
    Genes,
    Gmb,
    MatrixFlat,
    MatrixCurried,
}

impl Data {
    pub fn loads(self) -> Vec<LoadSpec> {
        match self {
            Data::None => vec![],
            Data::Genes => vec![load("Genes", "genes.csv", "set", Some(GENES_SCHEMA))],
            Data::Gmb => vec![
                load("Genes", "genes.csv", "bag", Some(GENES_SCHEMA)),
                load("Variants", "variants.rows", "nested", Some(VARIANTS_SCHEMA)),
            ],
            Data::MatrixFlat => vec![load("M", "example_m.coo", "coo-flat", Some("int"))],
            Data::MatrixCurried => vec![load("M", "example_m.coo", "coo-curried", Some("int"))],
        }
    }
}

pub struct Golden {
    pub name: &'static str,
    pub data: Data,
    pub typecheck: bool,
    pub program: &'static str,
    pub expected: &'static [&'static str],
}

const fn g(name: &'static str, data: Data, program: &'static str, expected: &'static [&'static str]) -> Golden {
    Golden { name, data, typecheck: false, program, expected }
}

const fn t(name: &'static str, data: Data, program: &'static str, expected: &'static [&'static str]) -> Golden {
    Golden { name, data, typecheck: true, program, expected }
}

macro_rules! vectors {
    () => {
        "let V = { 0 -> 1, 2 -> 2, 3 -> 3 }; let U = { 0 -> 4, 1 -> 5, 2 -> 6 }; "
    };
}

pub const GOLDEN: &[Golden] = &[
    g("dict-add", Data::None, r#"{ "a" -> 2, "b" -> 3 } + { "a" -> 4, "c" -> 5 }"#, &[r#"{ "a" -> 6, "b" -> 3, "c" -> 5 }"#]),
    g("dict-zero-entries", Data::None, r#"{ "a" -> 2, "b" -> 3 } == { "b" -> 3, "a" -> 2, "c" -> 0 }"#, &["true"]),
    g(
        "dict-products",
        Data::None,
        r#"let d1 = { "a" -> 2, "b" -> 3 }; let d2 = { "a" -> 4, "c" -> 5 }; d1 * d2; d2 * d1"#,
        &[
            r#"{ "a" -> { "a" -> 8, "c" -> 10 }, "b" -> { "a" -> 12, "c" -> 15 } }"#,
            r#"{ "a" -> { "a" -> 8, "b" -> 12 }, "c" -> { "a" -> 10, "b" -> 15 } }"#,
        ],
    ),
    g(
        "dict-times-record",
        Data::None,
        r#"let d = { "a" -> 2, "b" -> 3 }; let r = <c = 4.0>; d * r"#,
        &[r#"{ "a" -> <c=8.0>, "b" -> <c=12.0> }"#],
    ),
    t(
        "dict-times-record-type",
        Data::None,
        r#"let d = { "a" -> 2, "b" -> 3 }; let r = <c = 4.0>; d * r"#,
        &["d : { string -> int }", "r : <c: real>", "{ string -> <c: real> }"],
    ),
    g(
        "sums",
        Data::None,
        r#"let d = { "a" -> 2, "b" -> 3 }; sum(x in d) x.val; sum(x in d) { x.key -> x.val * 2 }"#,
        &["5", r#"{ "a" -> 4, "b" -> 6 }"#],
    ),
    g("absent-key-lookup", Data::None, "{ 0 -> 1, 2 -> 2, 3 -> 3 }(2); { 0 -> 4, 1 -> 5, 2 -> 6 }(3)", &["2", "0"]),
    g(
        "hadamard",
        Data::None,
        concat!(vectors!(), "sum(x in V) { x.key -> x.val * U(x.key) }"),
        &["{ 0 -> 4, 2 -> 12 }"],
    ),
    g(
        "vector-blocks",
        Data::None,
        concat!(vectors!(), "la: had(V, U); la: dot(V, U); la: vsum(vadd(V, U))"),
        &["{ 0 -> 4, 2 -> 12 }", "16", "21"],
    ),
    g(
        "matvec",
        Data::MatrixFlat,
        "let V = { 0 -> 1, 2 -> 2, 3 -> 3 }; sum(x in M) { x.key.row -> x.val * V(x.key.col) }; la: matvec(M, V)",
        &["{ 0 -> 31 }", "{ 0 -> 31 }"],
    ),
    g("flat-matrix", Data::MatrixFlat, "M", &["{ <row=0, col=0> -> 7, <row=0, col=3> -> 8, <row=1, col=1> -> 9 }"]),
    g(
        "curried-matrix",
        Data::MatrixCurried,
        "M; la[curried]: trace(M); let V = { 0 -> 1, 2 -> 2, 3 -> 3 }; la[curried]: matvec(M, V)",
        &["{ 0 -> { 0 -> 7, 3 -> 8 }, 1 -> { 1 -> 9 } }", "16", "{ 0 -> 31 }"],
    ),
    g(
        "filter-filter",
        Data::None,
        "let R = { 1 -> 2, 2 -> 1, 4 -> 3, 7 -> 1 };
         let R1 = sum(r in R) if (r.key < 5) then { r.key -> r.val } else { } in
         sum(r in R1) if (1 < r.key) then { r.key -> r.val } else { }",
        &["{ 2 -> 1, 4 -> 3 }"],
    ),
    g(
        "covariance",
        Data::None,
        "let A = { 0 -> { 0 -> 1, 2 -> 2 }, 1 -> { 1 -> 3 } };
         let At = sum(row in A) sum(x in row.val) { x.key -> { row.key -> x.val } } in
         sum(row in At) { row.key -> sum(x in row.val) sum(y in A(x.key)) { y.key -> x.val * y.val } }",
        &["{ 0 -> { 0 -> 1, 2 -> 2 }, 1 -> { 1 -> 9 }, 2 -> { 0 -> 2, 2 -> 4 } }"],
    ),
    g(
        "select-genes",
        Data::Genes,
        "ra: select(g -> g.contig == 17, Genes)",
        &[concat!(
            r#"{ <name="BRCA1", desc="DNA repair associate", contig=17, start=43044295, end=43170245, gid="ENSG00000012048"> -> true, "#,
            r#"<name="TP53", desc="tumor protein p53", contig=17, start=7565097, end=7590856, gid="ENSG00000141510"> -> true }"#
        )],
    ),
    g("flatten", Data::None, r#"nrc: flatten({ { "a" -> 1 } -> 2 })"#, &[r#"{ "a" -> 2 }"#]),
    g(
        "bag-product",
        Data::None,
        r#"nrc: product({ "r" -> 2 }, { "s" -> 3 })"#,
        &[r#"{ <fst="r", snd="s"> -> 6 }"#],
    ),
    t(
        "gmb-types",
        Data::Gmb,
        GMB,
        &[
            "gv : { <sample: string, gene: string, burden: real> -> int }",
            "tmp : { string -> { <sample: string, gene: string, burden: real> -> int } }",
            "gmb : { <sample: string, burdens: { <gene: string, burden: real> -> int }> -> int }",
            "{ <sample: string, burdens: { <gene: string, burden: real> -> int }> -> int }",
        ],
    ),
    g(
        "gmb",
        Data::Gmb,
        GMB,
        &[concat!(
            r#"{ <sample="TCGA-AN-A046", burdens={ <gene="NOTCH2", burden=1.0> -> 1 }> -> 1, "#,
            r#"<sample="TCGA-BH-A0B6", burdens={ <gene="BRCA1", burden=1.0> -> 1, <gene="NOTCH2", burden=2.0> -> 1 }> -> 1 }"#
        )],
    ),
    g("gmb-hash-join", Data::Gmb, GMB_HASH_JOIN, &[GMB_GV]),
    g("gmb-nested-loop", Data::Gmb, GMB_NESTED_LOOP, &[GMB_GV]),
];

pub const GMB: &str = include_str!("../../../../fixtures/gmb.sdql");

/// Variants joined with genes on contig, nested loop form.
pub const GMB_NESTED_LOOP: &str = "
sum(v in Variants) sum(g in Genes)
  if (g.key.contig == v.key.contig && g.key.start <= v.key.start && g.key.end >= v.key.start) then
    sum(c in v.key.genotypes) { <sample = c.key.sample, gene = g.key.name, burden = c.key.call> -> g.val * c.val * v.val }
  else { }";

/// The same join with genes partitioned by contig.
pub const GMB_HASH_JOIN: &str = "
let Gp = sum(g in Genes) { g.key.contig -> { g.key -> g.val } } in
sum(v in Variants) sum(g in Gp(v.key.contig))
  if (g.key.start <= v.key.start && g.key.end >= v.key.start) then
    sum(c in v.key.genotypes) { <sample = c.key.sample, gene = g.key.name, burden = c.key.call> -> g.val * c.val * v.val }
  else { }";

const GMB_GV: &str = concat!(
    r#"{ <sample="TCGA-AN-A046", gene="BRCA1", burden=0.0> -> 1, <sample="TCGA-AN-A046", gene="NOTCH2", burden=1.0> -> 1, "#,
    r#"<sample="TCGA-BH-A0B6", gene="BRCA1", burden=1.0> -> 1, <sample="TCGA-BH-A0B6", gene="NOTCH2", burden=2.0> -> 1 }"#
);

/// Run a golden program; returns its output lines.
pub fn run_golden(gp: &Golden, rules: RewriteConfig) -> Result<Vec<String>, SessionError> {
    let flags = Flags { typecheck_only: gp.typecheck, ..Flags::default() };
    let mut s = Session::new(SessionConfig { loads: gp.data.loads(), layouts: vec![], rules, flags })?;
    let mut out = Vec::new();
    s.run_program(gp.program, &mut out)?;
    Ok(String::from_utf8(out).unwrap().lines().map(str::to_string).collect())
}
