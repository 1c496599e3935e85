//! Loaders that turn CSV tables, nested row files and coordinate-format
//! matrices into SDQL values, plus the canonical value text.
//!
//! Every loader returns a canonical value together with its type.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sdql_core::front::RelLayout;
use sdql_core::parse::{parse_type, parse_value, ParseError, Parser, Tok};
use sdql_core::typecheck::{type_of_value, value_has_type};
use sdql_core::value::canonicalize;
use sdql_core::{Name, ScalarType, Type, Value};
use thiserror::Error;

pub use sdql_core::value::dump_value;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("header {found:?} does not match schema {expected:?}")]
    Header { expected: Vec<String>, found: Vec<String> },
    #[error("line {line}: expected {expected} fields, found {found}")]
    Arity { line: u64, expected: usize, found: usize },
    #[error("line {line}, column `{column}`: cannot read {text:?} as {ty}")]
    Cell { line: u64, column: String, text: String, ty: Type },
    #[error("line {line}: {msg}")]
    Format { line: u64, msg: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl LoadError {
    fn format(line: usize, msg: impl Into<String>) -> LoadError {
        LoadError::Format { line: line as u64, msg: msg.into() }
    }
}

/// How the rows of a table become a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    /// `{ row -> true }`; duplicate rows collapse.
    Set,
    /// `{ row -> n }` where `n` counts the copies of the row.
    Bag,
    /// `[| row |]` in file order.
    RowArray,
    /// `< a = [| A |], ... >` in file order.
    Columnar,
}

impl Semantics {
    pub fn layout(self) -> RelLayout {
        match self {
            Semantics::Set => RelLayout::Set,
            Semantics::Bag => RelLayout::Bag,
            Semantics::RowArray => RelLayout::Row,
            Semantics::Columnar => RelLayout::Columnar,
        }
    }
}

/// Ordered, uniquely named columns and the semantics of the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub attrs: Vec<(Name, Type)>,
    pub semantics: Semantics,
}

impl Schema {
    pub fn new(attrs: Vec<(Name, Type)>, semantics: Semantics) -> Result<Schema, LoadError> {
        let mut seen = BTreeSet::new();
        for (n, _) in &attrs {
            if !seen.insert(n.clone()) {
                return Err(LoadError::Schema(format!("attribute `{n}` appears twice")));
            }
        }
        Ok(Schema { attrs, semantics })
    }

    /// Parse `a: int, b: string` (or the same wrapped in `< >`).
    pub fn parse(src: &str, semantics: Semantics) -> Result<Schema, LoadError> {
        let src = src.trim();
        let text = if src.starts_with('<') { src.to_string() } else { format!("<{src}>") };
        match parse_type(&text) {
            Ok(Type::Record(fs)) => Schema::new(fs, semantics),
            Ok(t) => Err(LoadError::Schema(format!("expected a list of attributes, found {t}"))),
            Err(e) => Err(LoadError::Schema(e.to_string())),
        }
    }

    pub fn row_type(&self) -> Type {
        Type::Record(self.attrs.clone())
    }

    pub fn names(&self) -> Vec<Name> {
        self.attrs.iter().map(|(n, _)| n.clone()).collect()
    }

    /// The type of the loaded value.
    pub fn value_type(&self) -> Type {
        let row = self.row_type();
        match self.semantics {
            Semantics::Set => Type::set(row),
            Semantics::Bag => Type::dict(row, Type::INT),
            Semantics::RowArray => Type::array(row),
            Semantics::Columnar => Type::record(self.attrs.iter().map(|(n, t)| (n.clone(), Type::array(t.clone())))),
        }
    }
}

fn read_file(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })
}

/// Read a literal as type `t`, widening `bool <: int <: real` where the
/// type asks for it.
pub fn coerce(v: &Value, t: &Type) -> Option<Value> {
    let out = match (v, t) {
        (Value::Int(i), Type::Scalar(ScalarType::Real)) => Value::Real(*i as f64),
        (Value::Bool(b), Type::Scalar(ScalarType::Int)) => Value::Int(*b as i64),
        (Value::Bool(b), Type::Scalar(ScalarType::Real)) => Value::Real(*b as i64 as f64),
        (Value::Int(i), Type::Scalar(ScalarType::Nat)) if *i >= 0 => Value::Nat(*i as u64),
        (Value::Record(fs), Type::Record(ts)) if fs.len() == ts.len() => Value::record(
            fs.iter()
                .zip(ts)
                .map(|((n, x), (m, u))| (n == m).then(|| coerce(x, u).map(|x| (n.clone(), x))).flatten())
                .collect::<Option<Vec<_>>>()?,
        ),
        (Value::Dict(d), Type::Dict { key, val, layout }) => {
            let entries = d.entries().map(|(k, x)| Some((coerce(&k, key)?, coerce(x, val)?)));
            match layout {
                sdql_core::Layout::Dense => Value::array(entries.map(|e| e.map(|(_, x)| x)).collect::<Option<_>>()?),
                sdql_core::Layout::Hash => Value::dict(entries.collect::<Option<Vec<_>>>()?).ok()?,
            }
        }
        (x, _) => x.clone(),
    };
    let out = canonicalize(&out);
    value_has_type(&out, t).then_some(out)
}

fn parse_cell(text: &str, t: &Type) -> Option<Value> {
    match t {
        Type::Scalar(ScalarType::Str) => Some(Value::str(text)),
        Type::Scalar(ScalarType::Int) => text.trim().parse().ok().map(Value::Int),
        Type::Scalar(ScalarType::Nat) => text.trim().parse().ok().map(Value::Nat),
        Type::Scalar(ScalarType::Real) => match text.trim().parse::<f64>() {
            Ok(x) if !x.is_nan() => Some(Value::Real(x)),
            _ => None,
        },
        Type::Scalar(ScalarType::Bool) => match text.trim() {
            "true" => Some(Value::Bool(true)),
            "false" => Some(Value::Bool(false)),
            _ => None,
        },
        Type::Scalar(ScalarType::Tagged(k)) => match text.trim().parse::<f64>() {
            Ok(x) if k.in_domain(x) => Some(Value::Tagged(*k, x)),
            _ => None,
        },
        _ => parse_value(text).ok().and_then(|v| coerce(&v, t)),
    }
}

/// Build the value for rows with multiplicities under `schema`.
fn assemble(schema: &Schema, rows: Vec<(u64, Value, i64)>) -> Result<Value, LoadError> {
    let v = match schema.semantics {
        Semantics::Set => Value::set(rows.into_iter().map(|(_, r, _)| r)),
        Semantics::Bag => Value::dict(rows.into_iter().map(|(_, r, m)| (r, Value::Int(m))))
            .map_err(|e| LoadError::Schema(e.to_string()))?,
        Semantics::RowArray | Semantics::Columnar => {
            if let Some((line, _, m)) = rows.iter().find(|(_, _, m)| *m != 1) {
                return Err(LoadError::Format {
                    line: *line,
                    msg: format!("multiplicity {m} cannot be stored in a row layout"),
                });
            }
            let rows: Vec<Value> = rows.into_iter().map(|(_, r, _)| r).collect();
            if schema.semantics == Semantics::RowArray {
                Value::array(rows)
            } else {
                Value::record(schema.attrs.iter().map(|(n, _)| {
                    let col = rows.iter().map(|r| r.field(n).cloned().expect("row built from schema")).collect();
                    (n.clone(), Value::array(col))
                }))
            }
        }
    };
    Ok(canonicalize(&v))
}

/// Read CSV text: a header naming the schema's attributes in order, then
/// one row per record. Empty input yields the empty relation.
pub fn read_csv(text: &str, schema: &Schema) -> Result<Value, LoadError> {
    if text.trim().is_empty() {
        return assemble(schema, Vec::new());
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let expected: Vec<String> = schema.attrs.iter().map(|(n, _)| n.to_string()).collect();
    if header != expected {
        return Err(LoadError::Header { expected, found: header });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != schema.attrs.len() {
            return Err(LoadError::Arity { line, expected: schema.attrs.len(), found: rec.len() });
        }
        let fields = rec
            .iter()
            .zip(&schema.attrs)
            .map(|(cell, (n, t))| {
                parse_cell(cell, t)
                    .map(|v| (n.clone(), v))
                    .ok_or_else(|| LoadError::Cell { line, column: n.to_string(), text: cell.to_string(), ty: t.clone() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((line, Value::record(fields), 1));
    }
    assemble(schema, rows)
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Value, LoadError> {
    read_csv(&read_file(path.as_ref())?, schema)
}

/// Read the nested row format: one record literal per line, optionally
/// followed by `-> n` for a multiplicity other than one. Blank lines and
/// lines starting with `#` are skipped.
pub fn read_nested(text: &str, schema: &Schema) -> Result<Value, LoadError> {
    let row_type = schema.row_type();
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let src = raw.trim();
        if src.is_empty() || src.starts_with('#') {
            continue;
        }
        let syntax = |e: ParseError| LoadError::format(line, format!("col {}: {}", e.col, e.msg));
        let mut p = Parser::new(src).map_err(syntax)?;
        let row = p.value().map_err(syntax)?;
        let mult = if p.eat("->") {
            match p.bump() {
                Tok::Int(n) if n > 0 => n,
                t => return Err(LoadError::format(line, format!("expected a positive multiplicity, found {t}"))),
            }
        } else {
            1
        };
        p.expect_eof().map_err(syntax)?;
        let row = coerce(&row, &row_type)
            .ok_or_else(|| LoadError::format(line, format!("row does not have type {row_type}")))?;
        rows.push((line as u64, row, mult));
    }
    assemble(schema, rows)
}

pub fn load_nested(path: impl AsRef<Path>, schema: &Schema) -> Result<Value, LoadError> {
    read_nested(&read_file(path.as_ref())?, schema)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CooLayout {
    /// `{ <row: int, col: int> -> S }`.
    Flat,
    /// `{ int -> { int -> S } }`.
    Curried,
    /// `[| [| S |] |]`, zeros included.
    Dense,
}

impl CooLayout {
    pub fn value_type(self, elem: ScalarType) -> Type {
        let s = Type::Scalar(elem);
        match self {
            CooLayout::Flat => Type::dict(Type::record([("row", Type::INT), ("col", Type::INT)]), s),
            CooLayout::Curried => Type::dict(Type::INT, Type::dict(Type::INT, s)),
            CooLayout::Dense => Type::array(Type::array(s)),
        }
    }
}

fn zero(elem: ScalarType) -> Value {
    match elem {
        ScalarType::Int => Value::Int(0),
        _ => Value::Real(0.0),
    }
}

/// Read whitespace-separated `row col value` triples with 0-based indices.
/// An optional first line `rows cols` gives the dimensions; the dense
/// layout requires it. Zero values are dropped from sparse layouts.
pub fn read_coo(text: &str, layout: CooLayout, elem: ScalarType) -> Result<Value, LoadError> {
    if !matches!(elem, ScalarType::Int | ScalarType::Real) {
        return Err(LoadError::Schema(format!("matrix entries must be int or real, not {}", elem.name())));
    }
    let mut dims: Option<(i64, i64)> = None;
    let mut seen = BTreeSet::new();
    let mut triples = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let src = raw.trim();
        if src.is_empty() || src.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = src.split_whitespace().collect();
        let index = |s: &str| -> Result<i64, LoadError> {
            let n: i64 = s.parse().map_err(|_| LoadError::format(line, format!("bad index `{s}`")))?;
            if n < 0 {
                return Err(LoadError::format(line, format!("negative index {n}")));
            }
            Ok(n)
        };
        if first && fields.len() == 2 {
            dims = Some((index(fields[0])?, index(fields[1])?));
            first = false;
            continue;
        }
        first = false;
        let [r, c, x] = fields[..] else {
            return Err(LoadError::format(line, format!("expected `row col value`, found {} fields", fields.len())));
        };
        let (r, c) = (index(r)?, index(c)?);
        if let Some((nr, nc)) = dims {
            if r >= nr || c >= nc {
                return Err(LoadError::format(line, format!("({r}, {c}) is outside a {nr}x{nc} matrix")));
            }
        }
        let x = parse_cell(x, &Type::Scalar(elem))
            .ok_or_else(|| LoadError::format(line, format!("cannot read `{x}` as {}", elem.name())))?;
        if !seen.insert((r, c)) {
            return Err(LoadError::format(line, format!("duplicate coordinate ({r}, {c})")));
        }
        if !x.is_zero() || layout == CooLayout::Dense {
            triples.push((r, c, x));
        }
    }
    let v = match layout {
        CooLayout::Flat => Value::dict(triples.into_iter().map(|(r, c, x)| {
            (Value::record([("row", Value::Int(r)), ("col", Value::Int(c))]), x)
        })),
        CooLayout::Curried => Value::dict(
            triples.into_iter().map(|(r, c, x)| (Value::Int(r), Value::dict([(Value::Int(c), x)]).expect("one entry"))),
        ),
        CooLayout::Dense => {
            let (nr, nc) = dims.ok_or_else(|| LoadError::format(1, "the dense layout needs a `rows cols` header"))?;
            let mut m = vec![vec![zero(elem); nc as usize]; nr as usize];
            for (r, c, x) in triples {
                m[r as usize][c as usize] = x;
            }
            Ok(Value::array(m.into_iter().map(Value::array).collect()))
        }
    }
    .map_err(|e| LoadError::Schema(e.to_string()))?;
    Ok(canonicalize(&v))
}

pub fn load_coo_matrix(path: impl AsRef<Path>, layout: CooLayout, elem: ScalarType) -> Result<Value, LoadError> {
    read_coo(&read_file(path.as_ref())?, layout, elem)
}

/// Read a file holding one value literal, checked against `ty` if given.
pub fn read_value(text: &str, ty: Option<&Type>) -> Result<(Value, Type), LoadError> {
    let v = parse_value(text).map_err(|e| LoadError::format(e.line, format!("col {}: {}", e.col, e.msg)))?;
    match ty {
        Some(t) => coerce(&v, t)
            .map(|v| (v, t.clone()))
            .ok_or_else(|| LoadError::Schema(format!("value does not have type {t}"))),
        None => {
            let v = canonicalize(&v);
            let t = type_of_value(&v)
                .ok_or_else(|| LoadError::Schema("cannot infer the type of the value; give it explicitly".into()))?;
            Ok((v, t))
        }
    }
}

/// The formats accepted by `--load`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv(Semantics),
    Nested(Semantics),
    Coo(CooLayout),
    Value,
}

impl FromStr for Format {
    type Err = LoadError;

    fn from_str(s: &str) -> Result<Format, LoadError> {
        Ok(match s {
            "set" => Format::Csv(Semantics::Set),
            "bag" => Format::Csv(Semantics::Bag),
            "rows" => Format::Csv(Semantics::RowArray),
            "columnar" => Format::Csv(Semantics::Columnar),
            "nested" => Format::Nested(Semantics::Bag),
            "nested-set" => Format::Nested(Semantics::Set),
            "coo-flat" => Format::Coo(CooLayout::Flat),
            "coo-curried" => Format::Coo(CooLayout::Curried),
            "coo-dense" => Format::Coo(CooLayout::Dense),
            "value" => Format::Value,
            _ => return Err(LoadError::Schema(format!("unknown format `{s}`"))),
        })
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Format::Csv(Semantics::Set) => "set",
            Format::Csv(Semantics::Bag) => "bag",
            Format::Csv(Semantics::RowArray) => "rows",
            Format::Csv(Semantics::Columnar) => "columnar",
            Format::Nested(Semantics::Set) => "nested-set",
            Format::Nested(_) => "nested",
            Format::Coo(CooLayout::Flat) => "coo-flat",
            Format::Coo(CooLayout::Curried) => "coo-curried",
            Format::Coo(CooLayout::Dense) => "coo-dense",
            Format::Value => "value",
        };
        f.write_str(s)
    }
}

/// `name=path:format[:schema]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSpec {
    pub name: Name,
    pub path: PathBuf,
    pub format: Format,
    pub schema: Option<String>,
}

impl FromStr for LoadSpec {
    type Err = LoadError;

    fn from_str(s: &str) -> Result<LoadSpec, LoadError> {
        let bad = || LoadError::Schema(format!("expected `name=path:format[:schema]`, found `{s}`"));
        let (name, rest) = s.split_once('=').ok_or_else(bad)?;
        let (path, rest) = rest.split_once(':').ok_or_else(bad)?;
        let (format, schema) = match rest.split_once(':') {
            Some((f, sc)) => (f, Some(sc.to_string())),
            None => (rest, None),
        };
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(bad());
        }
        Ok(LoadSpec { name: name.into(), path: path.into(), format: format.parse()?, schema })
    }
}

/// A loaded binding: its value, type and, for relations and matrices, the
/// layout it is stored in.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub value: Value,
    pub ty: Type,
    pub layout: Option<RelLayout>,
    pub schema: Option<Schema>,
}

impl LoadSpec {
    pub fn load(&self) -> Result<Loaded, LoadError> {
        let schema = |sem| -> Result<Schema, LoadError> {
            let src = self.schema.as_deref().ok_or_else(|| LoadError::Schema(format!("format {} needs a schema", self.format)))?;
            Schema::parse(src, sem)
        };
        Ok(match self.format {
            Format::Csv(sem) | Format::Nested(sem) => {
                let schema = schema(sem)?;
                let value = match self.format {
                    Format::Csv(_) => load_csv(&self.path, &schema)?,
                    _ => load_nested(&self.path, &schema)?,
                };
                Loaded { value, ty: schema.value_type(), layout: Some(sem.layout()), schema: Some(schema) }
            }
            Format::Coo(layout) => {
                let elem = match self.schema.as_deref().map(str::trim) {
                    None | Some("") | Some("real") | Some("double") => ScalarType::Real,
                    Some("int") => ScalarType::Int,
                    Some(other) => return Err(LoadError::Schema(format!("matrix entries must be int or real, not `{other}`"))),
                };
                let rel = match layout {
                    CooLayout::Flat => Some(RelLayout::FlatMatrix),
                    CooLayout::Curried => Some(RelLayout::CurriedMatrix),
                    CooLayout::Dense => None,
                };
                Loaded {
                    value: load_coo_matrix(&self.path, layout, elem)?,
                    ty: layout.value_type(elem),
                    layout: rel,
                    schema: None,
                }
            }
            Format::Value => {
                let ty = match self.schema.as_deref() {
                    Some(t) => Some(parse_type(t).map_err(|e| LoadError::Schema(e.to_string()))?),
                    None => None,
                };
                let (value, ty) = read_value(&read_file(&self.path)?, ty.as_ref())?;
                Loaded { value, ty, layout: None, schema: None }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sdql_core::value::values_equal;

    const GENES: &str = "name,desc,contig,start,end,gid
NOTCH2,notch receptor 2,1,119911553,120100779,ENSG00000134250
BRCA1,DNA repair associate,17,43044295,43170245,ENSG00000012048
TP53,tumor protein p53,17,7565097,7590856,ENSG00000141510
";

    fn genes(sem: Semantics) -> Schema {
        Schema::parse("name: string, desc: string, contig: int, start: int, end: int, gid: string", sem).unwrap()
    }

    #[test]
    fn genes_as_set() {
        let v = read_csv(GENES, &genes(Semantics::Set)).unwrap();
        let want = parse_value(
            r#"{ <name="NOTCH2",desc="notch receptor 2", contig=1, start=119911553, end=120100779, gid="ENSG00000134250">, <name="BRCA1",desc="DNA repair associate", contig=17, start=43044295, end=43170245, gid="ENSG00000012048">, <name="TP53",desc="tumor protein p53", contig=17, start=7565097, end=7590856, gid="ENSG00000141510"> }"#,
        )
        .unwrap();
        assert!(values_equal(&v, &want));
        assert!(value_has_type(&v, &genes(Semantics::Set).value_type()));
    }

    #[test]
    fn genes_as_rows_keep_file_order() {
        let v = read_csv(GENES, &genes(Semantics::RowArray)).unwrap();
        let d = v.as_dict().unwrap();
        let names: Vec<String> = d.entries().map(|(_, r)| dump_value(r.field("name").unwrap())).collect();
        assert_eq!(names, ["\"NOTCH2\"", "\"BRCA1\"", "\"TP53\""]);
        let cols = read_csv(GENES, &genes(Semantics::Columnar)).unwrap();
        assert_eq!(dump_value(cols.field("contig").unwrap()), "[| 1, 17, 17 |]");
    }

    #[test]
    fn bag_counts_and_set_collapses_duplicates() {
        let text = "a,b\n1,x\n1,x\n2,y\n";
        let bag = read_csv(text, &Schema::parse("a: int, b: string", Semantics::Bag).unwrap()).unwrap();
        assert_eq!(dump_value(&bag), r#"{ <a=1, b="x"> -> 2, <a=2, b="y"> -> 1 }"#);
        let set = read_csv(text, &Schema::parse("a: int, b: string", Semantics::Set).unwrap()).unwrap();
        assert_eq!(set.as_dict().unwrap().len(), 2);
        let rows = read_csv(text, &Schema::parse("a: int, b: string", Semantics::RowArray).unwrap()).unwrap();
        assert_eq!(rows.as_dict().unwrap().len(), 3);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let s = Schema::parse("a: int, b: string", Semantics::Bag).unwrap();
        match read_csv("a,b\n1,x\nzz,y\n", &s).unwrap_err() {
            LoadError::Cell { line, column, .. } => assert_eq!((line, column.as_str()), (3, "a")),
            e => panic!("{e}"),
        }
        assert!(matches!(read_csv("a,b\n1\n", &s).unwrap_err(), LoadError::Arity { line: 2, .. }));
        assert!(matches!(read_csv("b,a\n", &s).unwrap_err(), LoadError::Header { .. }));
        assert_eq!(dump_value(&read_csv("", &s).unwrap()), "{ }");
    }

    #[test]
    fn quoted_cells() {
        let s = Schema::parse("a: string, b: int", Semantics::Bag).unwrap();
        let v = read_csv("a,b\n\"x, \"\"y\"\"\",3\n", &s).unwrap();
        assert_eq!(dump_value(&v), r#"{ <a="x, \"y\"", b=3> -> 1 }"#);
    }

    #[test]
    fn duplicate_attributes_rejected() {
        assert!(Schema::parse("a: int, a: int", Semantics::Set).is_err());
    }

    #[test]
    fn nested_variants() {
        let text = r#"# variants
<contig=17, start=43093817, reference="C", alternate="A", genotypes={ <sample="TCGA-AN-A046", call=0> -> 1, <sample="TCGA-BH-A0B6", call=1> -> 1 }>
<contig=1, start=119967501, reference="G", alternate="C", genotypes={ <sample="TCGA-AN-A046", call=1> -> 1, <sample="TCGA-BH-A0B6", call=2> -> 1 }> -> 2
"#;
        let schema = Schema::parse(
            "contig: int, start: int, reference: string, alternate: string, genotypes: { <sample: string, call: real> -> int }",
            Semantics::Bag,
        )
        .unwrap();
        let v = read_nested(text, &schema).unwrap();
        assert!(value_has_type(&v, &schema.value_type()));
        let mults: Vec<String> = v.as_dict().unwrap().entries().map(|(_, m)| dump_value(m)).collect();
        assert_eq!(mults, ["2", "1"]);
        assert!(read_nested("<contig=1>\n", &schema).is_err());
    }

    #[test]
    fn coo_layouts() {
        let text = "0 0 7\n0 3 8\n1 1 9\n2 2 0\n";
        let flat = read_coo(text, CooLayout::Flat, ScalarType::Int).unwrap();
        assert_eq!(
            dump_value(&flat),
            "{ <row=0, col=0> -> 7, <row=0, col=3> -> 8, <row=1, col=1> -> 9 }"
        );
        let cur = read_coo(text, CooLayout::Curried, ScalarType::Int).unwrap();
        assert_eq!(dump_value(&cur), "{ 0 -> { 0 -> 7, 3 -> 8 }, 1 -> { 1 -> 9 } }");
        let dense = read_coo(&format!("2 4\n{}", "0 0 7\n0 3 8\n1 1 9\n"), CooLayout::Dense, ScalarType::Int).unwrap();
        assert_eq!(dump_value(&dense), "[| [| 7, 0, 0, 8 |], [| 0, 9, 0, 0 |] |]");
    }

    #[test]
    fn coo_errors() {
        assert!(read_coo("0 0 1\n", CooLayout::Dense, ScalarType::Int).is_err());
        assert!(read_coo("0 -1 1\n", CooLayout::Flat, ScalarType::Int).is_err());
        assert!(read_coo("0 1 1\n0 1 2\n", CooLayout::Flat, ScalarType::Int).is_err());
        assert!(read_coo("2 2\n2 0 1\n", CooLayout::Flat, ScalarType::Int).is_err());
    }

    #[test]
    fn load_spec_syntax() {
        let s: LoadSpec = "Genes=data/genes.csv:set:name: string, contig: int".parse().unwrap();
        assert_eq!(&*s.name, "Genes");
        assert_eq!(s.format, Format::Csv(Semantics::Set));
        assert_eq!(s.schema.as_deref(), Some("name: string, contig: int"));
        let m: LoadSpec = "M=m.coo:coo-curried".parse().unwrap();
        assert_eq!(m.format, Format::Coo(CooLayout::Curried));
        assert!("M=m.coo:parquet".parse::<LoadSpec>().is_err());
    }

    #[test]
    fn value_files() {
        let (v, t) = read_value(r#"{ "a" -> 1 }"#, None).unwrap();
        assert_eq!(t.to_string(), "{ string -> int }");
        assert_eq!(dump_value(&v), r#"{ "a" -> 1 }"#);
        let t = parse_type("{ string -> real }").unwrap();
        let (v, _) = read_value(r#"{ "a" -> 1 }"#, Some(&t)).unwrap();
        assert_eq!(dump_value(&v), r#"{ "a" -> 1.0 }"#);
    }
}
