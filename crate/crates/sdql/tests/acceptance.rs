//! Acceptance harness: one line per criterion, nonzero exit on any failure.
//! Seeds default to fixed values; set `SDQL_SEED` to vary them.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{run_golden, GOLDEN};
use sdql::io::read_value;
use sdql::seed_from_env;
use sdql::session::{split_items, Session, SessionConfig};
use sdql_core::front::{lower_la, La, LaLayout, RelLayout};
use sdql_core::interp::{eval_with_metrics, Environment};
use sdql_core::opt::{optimize, RewriteConfig, Rule};
use sdql_core::parse::{parse, parse_type};
use sdql_core::value::values_equal;
use sdql_core::Value;
use sdql_gen::checks::{rewrite_sound, semantics, semiring_laws, LawInstance};
use sdql_gen::data::{curried_matrix, flat_matrix, rows, sparse_matrix, Domain, GmbData, GENES_SCHEMA, VARIANTS_SCHEMA};
use sdql_gen::oracles::{groupjoin_case, hash_join_case, la_case, nrc_case, ra_case};
use sdql_gen::{closed_term, rng, TermConfig};

type Outcome = Result<String, String>;

/// Run `cases` seeded cases of `f`, failing on the first counterexample.
fn cases(n: u64, base: u64, mut f: impl FnMut(u64) -> Result<(), String>) -> Result<(), String> {
    for i in 0..n {
        let seed = base.wrapping_add(i);
        f(seed).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(())
}

fn golden() -> Outcome {
    for gp in GOLDEN {
        let got = run_golden(gp, RewriteConfig::none()).map_err(|e| format!("{}: {e}", gp.name))?;
        if got != gp.expected {
            return Err(format!("{}: got {got:?}", gp.name));
        }
    }
    Ok(format!("{} programs", GOLDEN.len()))
}

fn laws() -> Outcome {
    let base = seed_from_env(1);
    let n = 5400;
    cases(n, base, |seed| semiring_laws(&LawInstance::generate(&mut rng(seed), seed as usize)))?;
    Ok(format!("{n} triples over 9 scalar kinds"))
}

fn fuzz_semantics() -> Outcome {
    let base = seed_from_env(2);
    let (n, cfg) = (1000, TermConfig::default());
    let (mut steps, mut largest) = (0, 0);
    cases(n, base, |seed| {
        let (e, t) = closed_term(&mut rng(seed), &cfg);
        if e.size() > cfg.max_size {
            return Err(format!("term of size {}", e.size()));
        }
        largest = largest.max(e.size());
        steps += semantics(&e, &t)?.steps;
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    Ok(format!("{n} terms, largest {largest} nodes, {steps} steps"))
}

fn rewrites() -> Outcome {
    let base = seed_from_env(3);
    let n = 500;
    let mut fired = 0;
    for rule in Rule::ALL {
        cases(n, base, |seed| {
            let (env, e) = sdql_gen::rewrites::instance(rule, &mut rng(seed));
            rewrite_sound(rule, &env, &e).map(|_| ())
        })
        .map_err(|e| format!("{rule}: {e}"))?;
        fired += n;
    }
    for gp in GOLDEN.iter().filter(|g| !g.typecheck) {
        let plain = run_golden(gp, RewriteConfig::none()).map_err(|e| e.to_string())?;
        let optimized = run_golden(gp, RewriteConfig::default()).map_err(|e| e.to_string())?;
        if plain != optimized {
            return Err(format!("{}: {plain:?} vs {optimized:?}", gp.name));
        }
        let config = SessionConfig { loads: gp.data.loads(), ..SessionConfig::default() };
        let mut s = Session::new(config).map_err(|e| e.to_string())?;
        for item in split_items(gp.program) {
            let o = s.optimized(&item).map_err(|e| e.to_string())?;
            let t = s.type_of(&item).map_err(|e| e.to_string())?;
            if !o.converged || o.ty != t {
                return Err(format!("{}: `{item}` converged={} type {} vs {t}", gp.name, o.converged, o.ty));
            }
            s.exec(&item, &mut Vec::new()).map_err(|e| e.to_string())?;
        }
    }
    Ok(format!("{fired} instances over {} rules, golden fixpoint", Rule::ALL.len()))
}

fn oracles() -> Outcome {
    let base = seed_from_env(4);
    cases(1000, base, |s| ra_case(&mut rng(s))).map_err(|e| format!("ra {e}"))?;
    cases(300, base, |s| nrc_case(&mut rng(s))).map_err(|e| format!("nrc {e}"))?;
    cases(300, base, |s| la_case(&mut rng(s))).map_err(|e| format!("la {e}"))?;
    cases(200, base, |s| hash_join_case(&mut rng(s))).map_err(|e| format!("hash join {e}"))?;
    cases(200, base, |s| groupjoin_case(&mut rng(s))).map_err(|e| format!("groupjoin {e}"))?;
    Ok("ra 1000, nrc 300, la 300, hash join 200, groupjoin 200".into())
}

fn counters() -> Outcome {
    let mut r = rng(seed_from_env(5));
    let a = sparse_matrix(&mut r, 64, 64, 0.05);
    let b = sparse_matrix(&mut r, 64, 64, 0.05);
    let (n1, n2) = (a.len() as u64, b.len() as u64);
    let row_len = |m: &[(i64, i64, i64)]| {
        let mut out: BTreeMap<i64, u64> = BTreeMap::new();
        for e in m {
            *out.entry(e.0).or_default() += 1;
        }
        out
    };
    let (ra, rb) = (row_len(&a), row_len(&b));
    let col_count = a.iter().map(|e| e.1).collect::<BTreeSet<_>>().len() as u64;

    let env_in = |mode: LaLayout| {
        let (mat, t): (fn(&[(i64, i64, i64)]) -> Value, &str) = match mode {
            LaLayout::Flat => (flat_matrix, "{ <row: int, col: int> -> int }"),
            LaLayout::Curried => (curried_matrix, "{ int -> { int -> int } }"),
        };
        let t = parse_type(t).unwrap();
        Environment::new().with("A", mat(&a), t.clone()).with("B", mat(&b), t)
    };
    let matmul = La::bin(La::MatMul, La::var("A"), La::var("B"));
    let run = |mode: LaLayout| {
        let env = env_in(mode);
        let e = lower_la(&matmul, mode, &env.type_env()).map_err(|e| e.to_string())?;
        eval_with_metrics(&env, &e).map_err(|e| e.to_string())
    };
    let ((vf, mf), (vc, mc)) = (run(LaLayout::Flat)?, run(LaLayout::Curried)?);
    let want_flat = n1 + n1 * n2;
    let want_curried = ra.len() as u64 + n1 + a.iter().map(|e| rb.get(&e.1).copied().unwrap_or(0)).sum::<u64>();
    if mf.loop_iterations != want_flat || mc.loop_iterations != want_curried {
        return Err(format!(
            "flat {} (want {want_flat}), curried {} (want {want_curried})",
            mf.loop_iterations, mc.loop_iterations
        ));
    }
    if mc.loop_iterations * 10 >= n1 * n2 {
        return Err(format!("curried {} is not under 10% of {}", mc.loop_iterations, n1 * n2));
    }
    let flat_entries: BTreeMap<(i64, i64), Value> = vf
        .as_dict()
        .unwrap()
        .entries()
        .map(|(k, v)| ((k.field("row").unwrap().as_int().unwrap(), k.field("col").unwrap().as_int().unwrap()), v.clone()))
        .collect();
    let curried_entries: BTreeMap<(i64, i64), Value> = vc
        .as_dict()
        .unwrap()
        .entries()
        .flat_map(|(r, row)| {
            let r = r.as_int().unwrap();
            row.as_dict().unwrap().entries().map(move |(c, v)| ((r, c.as_int().unwrap()), v.clone())).collect::<Vec<_>>()
        })
        .collect();
    if flat_entries != curried_entries {
        return Err("flat and curried products differ".into());
    }

    let env = env_in(LaLayout::Curried);
    let cov = parse(
        "let At = sum(row in A) sum(x in row.val) { x.key -> { row.key -> x.val } } in
         sum(row in At) { row.key -> sum(x in row.val) sum(y in A(x.key)) { y.key -> x.val * y.val } }",
    )
    .unwrap();
    let fused = optimize(&env.type_env(), &cov, &RewriteConfig::default()).map_err(|e| e.to_string())?;
    let (v0, m0) = eval_with_metrics(&env, &cov).map_err(|e| e.to_string())?;
    let (v1, m1) = eval_with_metrics(&env, &fused.expr).map_err(|e| e.to_string())?;
    let pairs: u64 = a.iter().map(|e| ra[&e.0]).sum();
    let want_unfused = ra.len() as u64 + n1 + col_count + n1 + pairs;
    let want_fused = ra.len() as u64 + n1 + pairs;
    if !values_equal(&v0, &v1) || m0.loop_iterations != want_unfused || m1.loop_iterations != want_fused {
        return Err(format!(
            "covariance unfused {} (want {want_unfused}), fused {} (want {want_fused})",
            m0.loop_iterations, m1.loop_iterations
        ));
    }
    Ok(format!(
        "nnz {n1}x{n2}: flat {want_flat}, curried {want_curried}; covariance {want_unfused} -> {want_fused}"
    ))
}

fn layouts() -> Outcome {
    let mut r = rng(seed_from_env(6));
    let cols = [("id", Domain::Int(1_000_000)), ("a", Domain::Int(100)), ("b", Domain::Int(1000)), ("s", Domain::Str(20))];
    let table = rows(&mut r, &cols, 10_000);
    let distinct: BTreeSet<&Value> = table.iter().collect();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("t.csv");
    let mut csv = String::from("id,a,b,s\n");
    for row in &table {
        let f = |n: &str| row.field(n).unwrap().to_string().trim_matches('"').to_string();
        writeln!(csv, "{},{},{},{}", f("id"), f("a"), f("b"), f("s")).unwrap();
    }
    std::fs::write(&path, csv).map_err(|e| e.to_string())?;
    let queries = [
        "sum(r in T) if (r.key.a < 50) then { r.key.s -> r.key.b } else { }",
        "sum(r in T) if (r.key.b < 500) then 1 else 0",
        "sum(r in T) { <s = r.key.s, low = r.key.a < 10> -> 1 }",
    ];
    let spec = format!("T={}:set:id: int, a: int, b: int, s: string", path.display());
    let mut outputs = Vec::new();
    for layout in [RelLayout::Set, RelLayout::Row, RelLayout::Columnar] {
        let config = SessionConfig {
            loads: vec![spec.parse().map_err(|e: sdql::io::LoadError| e.to_string())?],
            layouts: vec![("T".into(), layout)],
            ..SessionConfig::default()
        };
        let mut s = Session::new(config).map_err(|e| e.to_string())?;
        let mut out = Vec::new();
        for q in queries {
            s.exec(q, &mut out).map_err(|e| e.to_string())?;
        }
        outputs.push(String::from_utf8(out).unwrap());
    }
    if outputs.iter().any(|o| *o != outputs[0]) {
        return Err("layouts disagree".into());
    }
    let count = distinct.iter().filter(|r| r.field("b").unwrap().as_int().unwrap() < 500).count();
    let second = outputs[0].lines().nth(1).unwrap_or_default();
    if second != count.to_string() {
        return Err(format!("count query gave {second}, expected {count}"));
    }
    Ok(format!("{} distinct rows, {} queries, dict/row/columnar", distinct.len(), queries.len()))
}

/// Burden per sample and gene, straight from the generated rows.
fn gmb_oracle(d: &GmbData) -> Value {
    let mut burden: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for v in &d.variants {
        for g in d.genes.iter().filter(|g| g.contig == v.contig && g.start <= v.start && v.start <= g.end) {
            for (sample, call) in &v.genotypes {
                *burden.entry(sample.clone()).or_default().entry(g.name.clone()).or_default() += *call as f64;
            }
        }
    }
    let rows = burden.into_iter().map(|(sample, genes)| {
        let burdens = Value::dict(genes.into_iter().filter(|(_, b)| *b != 0.0).map(|(gene, b)| {
            (Value::record([("gene", Value::str(&gene)), ("burden", Value::Real(b))]), Value::Int(1))
        }))
        .unwrap();
        (Value::record([("sample", Value::str(&sample)), ("burdens", burdens)]), Value::Int(1))
    });
    Value::dict(rows.collect::<Vec<_>>()).unwrap()
}

fn gmb() -> Outcome {
    let d = GmbData::generate(&mut rng(seed_from_env(7)), 100, 20, 10);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (gp, vp) = (dir.path().join("genes.csv"), dir.path().join("variants.rows"));
    std::fs::write(&gp, d.genes_csv()).map_err(|e| e.to_string())?;
    std::fs::write(&vp, d.variants_rows()).map_err(|e| e.to_string())?;
    let loads = vec![
        format!("Genes={}:bag:{GENES_SCHEMA}", gp.display()).parse().map_err(|e: sdql::io::LoadError| e.to_string())?,
        format!("Variants={}:nested:{VARIANTS_SCHEMA}", vp.display()).parse().map_err(|e: sdql::io::LoadError| e.to_string())?,
    ];
    let mut s = Session::new(SessionConfig { loads, ..SessionConfig::default() }).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    s.run_program(common::GMB, &mut out).map_err(|e| e.to_string())?;
    let text = String::from_utf8(out).unwrap();
    let t = parse_type("{ <sample: string, burdens: { <gene: string, burden: real> -> int }> -> int }").unwrap();
    let (got, _) = read_value(text.trim(), Some(&t)).map_err(|e| e.to_string())?;
    let want = gmb_oracle(&d);
    if !values_equal(&got, &want) {
        return Err(format!("got {got}\nwant {want}"));
    }
    let samples = got.as_dict().unwrap().len();
    let burdens: usize =
        got.as_dict().unwrap().entries().map(|(k, _)| k.field("burdens").unwrap().as_dict().unwrap().len()).sum();
    Ok(format!("{samples} samples, {burdens} nonzero gene burdens"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 8] = [
        ("golden examples", golden, 1),
        ("semiring laws", laws, 30),
        ("small-step semantics", fuzz_semantics, 60),
        ("rewrite soundness", rewrites, 60),
        ("translation oracles", oracles, 60),
        ("asymptotic counters", counters, 10),
        ("layout transparency", layouts, 30),
        ("gene mutational burden", gmb, 10),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > Duration::from_secs(limit) => Err(format!("{msg}; over the {limit}s budget")),
            o => o,
        };
        match outcome {
            Ok(msg) => println!("criterion {} {name}: PASS ({msg}, {:.2}s)", i + 1, took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({msg}, {:.2}s)", i + 1, took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
