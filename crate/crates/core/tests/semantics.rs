use proptest::prelude::*;
use sdql_core::interp::{eval, Environment};
use sdql_core::syntax::{expr_of_value, subst, Expr};
use sdql_core::typecheck::{type_of, TypeEnv};
use sdql_core::value::values_equal;
use sdql_gen::checks::{round_trip, semantics, type_determinism};
use sdql_gen::{closed_term, rng, TermConfig};

fn check(r: Result<(), String>) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn small_steps_agree_with_big_steps(seed in any::<u64>()) {
        let (e, t) = closed_term(&mut rng(seed), &TermConfig::default());
        check(semantics(&e, &t).map(|_| ()))?;
    }

    #[test]
    fn printing_round_trips(seed in any::<u64>()) {
        let (e, _) = closed_term(&mut rng(seed), &TermConfig::default());
        check(round_trip(&e))?;
    }

    #[test]
    fn typing_is_deterministic(seed in any::<u64>()) {
        let (e, _) = closed_term(&mut rng(seed), &TermConfig::default());
        check(type_determinism(&e))?;
    }

    /// Evaluating a `let` body with the bound value in the environment is
    /// the same as substituting the value into the body.
    #[test]
    fn substitution_commutes_with_evaluation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, e1, e2) = loop {
            if let (Expr::Let(x, e1, e2), _) = closed_term(&mut r, &TermConfig::default()) {
                break (x, *e1, *e2);
            }
        };
        let t1 = type_of(&TypeEnv::new(), &e1).unwrap();
        let v1 = eval(&Environment::new(), &e1).unwrap();
        let bound = eval(&Environment::new().with(x.clone(), v1.clone(), t1.clone()), &e2).unwrap();
        let substituted = eval(&Environment::new(), &subst(e2.clone(), &x, &expr_of_value(&v1, &t1))).unwrap();
        prop_assert!(values_equal(&bound, &substituted), "{e2} with {x} = {v1}: {bound} vs {substituted}");
    }
}
