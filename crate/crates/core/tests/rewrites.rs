use proptest::prelude::*;
use sdql_core::opt::Rule;
use sdql_gen::checks::rewrite_sound;
use sdql_gen::rewrites::instance;
use sdql_gen::rng;

fn sound(rule: Rule, seed: u64) -> Result<(), TestCaseError> {
    let (env, e) = instance(rule, &mut rng(seed));
    rewrite_sound(rule, &env, &e).map(|_| ()).map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn if_to_mul_is_sound(seed in any::<u64>()) { sound(Rule::IfToMul, seed)?; }

    #[test]
    fn vertical_key_fusion_is_sound(seed in any::<u64>()) { sound(Rule::VerticalKey, seed)?; }

    #[test]
    fn vertical_value_fusion_is_sound(seed in any::<u64>()) { sound(Rule::VerticalValue, seed)?; }

    #[test]
    fn horizontal_fusion_is_sound(seed in any::<u64>()) { sound(Rule::Horizontal, seed)?; }

    #[test]
    fn loop_invariant_motion_is_sound(seed in any::<u64>()) { sound(Rule::Licm, seed)?; }

    #[test]
    fn left_factorization_is_sound(seed in any::<u64>()) { sound(Rule::FactorizeLeft, seed)?; }

    #[test]
    fn right_factorization_is_sound(seed in any::<u64>()) { sound(Rule::FactorizeRight, seed)?; }
}
