mod common;

use common::{run_golden, Golden, GOLDEN};
use sdql::session::{split_items, Flags, Session, SessionConfig};
use sdql_core::opt::RewriteConfig;

fn check(gp: &Golden, rules: RewriteConfig) {
    let got = run_golden(gp, rules).unwrap_or_else(|e| panic!("{}: {e}", gp.name));
    assert_eq!(got, gp.expected, "{}", gp.name);
}

#[test]
fn golden_programs_without_rewrites() {
    for gp in GOLDEN {
        check(gp, RewriteConfig::none());
    }
}

#[test]
fn golden_programs_with_every_rewrite() {
    for gp in GOLDEN {
        check(gp, RewriteConfig::default());
    }
}

/// The optimizer reaches a fixpoint on every item and keeps its type.
#[test]
fn optimizer_fixpoint_keeps_types() {
    for gp in GOLDEN.iter().filter(|gp| !gp.typecheck) {
        let config = SessionConfig { loads: gp.data.loads(), flags: Flags::default(), ..SessionConfig::default() };
        let mut s = Session::new(config).unwrap();
        for item in split_items(gp.program) {
            let o = s.optimized(&item).unwrap_or_else(|e| panic!("{}: {e}", gp.name));
            assert!(o.converged, "{}: `{item}` did not converge", gp.name);
            assert_eq!(o.ty, s.type_of(&item).unwrap(), "{}: `{item}`", gp.name);
            s.exec(&item, &mut Vec::new()).unwrap();
        }
    }
}

#[test]
fn filter_pipeline_fuses_into_one_loop() {
    let gp = GOLDEN.iter().find(|g| g.name == "filter-filter").unwrap();
    let mut s = Session::new(SessionConfig::default()).unwrap();
    let items = split_items(gp.program);
    s.exec(&items[0], &mut Vec::new()).unwrap();
    let o = s.optimized(&items[1]).unwrap();
    let text = sdql_core::pretty::pretty(&o.expr);
    assert_eq!(text.matches("sum(").count(), 1, "{text}");
}
