use proptest::prelude::*;
use sdql_gen::oracles::{groupjoin_case, hash_join_case, la_case, nrc_case, ra_case};
use sdql_gen::rng;

fn check(r: Result<(), String>) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn relational_queries_match_direct_evaluation(seed in any::<u64>()) { check(ra_case(&mut rng(seed)))?; }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn nested_queries_match_direct_evaluation(seed in any::<u64>()) { check(nrc_case(&mut rng(seed)))?; }

    #[test]
    fn tensor_expressions_match_dense_arithmetic(seed in any::<u64>()) { check(la_case(&mut rng(seed)))?; }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hash_join_matches_nested_loop(seed in any::<u64>()) { check(hash_join_case(&mut rng(seed)))?; }

    #[test]
    fn groupjoin_matches_join_then_aggregate(seed in any::<u64>()) { check(groupjoin_case(&mut rng(seed)))?; }
}
