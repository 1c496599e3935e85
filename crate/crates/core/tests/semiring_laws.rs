use proptest::prelude::*;
use sdql_core::parse::parse_value;
use sdql_core::semiring::mul;
use sdql_core::value::values_equal;
use sdql_gen::checks::{semiring_laws, LawInstance};
use sdql_gen::rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn laws_hold_for_random_triples(seed in any::<u64>(), round in 0usize..9) {
        let inst = LawInstance::generate(&mut rng(seed), round);
        if let Err(msg) = semiring_laws(&inst) {
            return Err(TestCaseError::fail(format!("{msg}\n{inst:?}")));
        }
    }
}

#[test]
fn dictionary_product_is_not_commutative() {
    let d1 = parse_value(r#"{ "a" -> 2, "b" -> 3 }"#).unwrap();
    let d2 = parse_value(r#"{ "a" -> 4, "c" -> 5 }"#).unwrap();
    let l = mul(&d1, &d2).unwrap();
    let r = mul(&d2, &d1).unwrap();
    let want_l = parse_value(r#"{ "a" -> { "a" -> 8, "c" -> 10 }, "b" -> { "a" -> 12, "c" -> 15 } }"#).unwrap();
    let want_r = parse_value(r#"{ "a" -> { "a" -> 8, "b" -> 12 }, "c" -> { "a" -> 10, "b" -> 15 } }"#).unwrap();
    assert!(values_equal(&l, &want_l), "{l}");
    assert!(values_equal(&r, &want_r), "{r}");
    assert!(!values_equal(&l, &r));
}

#[test]
fn every_leaf_kind_is_covered() {
    let kinds: std::collections::BTreeSet<String> =
        (0..9).map(|round| LawInstance::generate(&mut rng(0), round).leaf.to_string()).collect();
    assert_eq!(kinds.len(), 9, "{kinds:?}");
}
