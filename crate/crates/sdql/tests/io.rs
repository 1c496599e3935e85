use proptest::prelude::*;
use rand::Rng;
use sdql::io::{dump_value, read_csv, read_nested, read_value, Schema, Semantics};
use sdql_core::value::{canonicalize, values_equal};
use sdql_core::Value;
use sdql_gen::data::{GmbData, GENES_SCHEMA, VARIANTS_SCHEMA};
use sdql_gen::{rng, scalar_kinds, semiring_type, value_of_type};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// Dumping a value and reading it back at its type gives it back.
    #[test]
    fn dump_then_read_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let kinds = scalar_kinds();
        let leaf = kinds[r.gen_range(0..kinds.len())];
        let t = semiring_type(&mut r, leaf, 3);
        let v = value_of_type(&mut r, &t);
        let text = dump_value(&v);
        let (back, _) = read_value(&text, Some(&t)).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert!(values_equal(&v, &back), "{text} read back as {back}");
        prop_assert_eq!(dump_value(&back), text);
    }

    /// Loaders emit canonical values, and a bag keeps every row.
    #[test]
    fn generated_tables_load_canonically(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (nv, ng) = (r.gen_range(0..30), r.gen_range(0..12));
        let d = GmbData::generate(&mut r, nv, ng, 4);
        let genes = read_csv(&d.genes_csv(), &Schema::parse(GENES_SCHEMA, Semantics::Bag).unwrap()).unwrap();
        let variants = read_nested(&d.variants_rows(), &Schema::parse(VARIANTS_SCHEMA, Semantics::Bag).unwrap()).unwrap();
        for v in [&genes, &variants] {
            prop_assert_eq!(&canonicalize(v), v);
        }
        let count = |v: &Value| v.as_dict().unwrap().entries().map(|(_, m)| m.as_int().unwrap()).sum::<i64>();
        prop_assert_eq!(count(&genes), ng as i64);
        prop_assert_eq!(count(&variants), nv as i64);
    }
}

#[test]
fn empty_csv_is_an_empty_relation() {
    let schema = Schema::parse("a: int, b: string", Semantics::Set).unwrap();
    assert_eq!(dump_value(&read_csv("a,b\n", &schema).unwrap()), "{ }");
}

#[test]
fn canonical_text() {
    let v = read_value(r#"{ "b" -> 3, "a" -> 2, "c" -> 0 }"#, None).unwrap().0;
    assert_eq!(dump_value(&v), r#"{ "a" -> 2, "b" -> 3 }"#);
    let r = read_value("<x = 1, y = 2.0>", None).unwrap().0;
    assert_eq!(dump_value(&r), "<x=1, y=2.0>");
}
