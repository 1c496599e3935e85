mod common;

use std::process::{Command, Output};

use common::{fixture, GENES_SCHEMA, VARIANTS_SCHEMA};

fn sdql(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdql")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gmb_loads() -> Vec<String> {
    vec![
        "--load".into(),
        format!("Genes={}:bag:{GENES_SCHEMA}", fixture("genes.csv").display()),
        "--load".into(),
        format!("Variants={}:nested:{VARIANTS_SCHEMA}", fixture("variants.rows").display()),
    ]
}

#[test]
fn exit_codes_follow_the_failing_stage() {
    let cases = [("1 + 2", 0), ("1 +", 2), (r#"1 + "a""#, 3), ("1 / 0", 4), ("let x = ; x", 2), ("y", 3)];
    for (program, code) in cases {
        let o = sdql(&["-e", program]);
        assert_eq!(o.status.code(), Some(code), "`{program}`: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn errors_name_their_stage() {
    let o = sdql(&["-e", r#"1 + "a""#]);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("sdql: type error:"));
    let o = sdql(&["--load", "X=/no/such/file.csv:set:a: int", "-e", "X"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("load error"));
    assert_eq!(sdql(&["--rules", "no-such-rule", "-e", "1"]).status.code(), Some(1));
}

#[test]
fn typecheck_flag_prints_types() {
    let o = sdql(&["--typecheck", "-e", r#"let d = { "a" -> 2, "b" -> 3 }; let r = <c = 4.0>; d * r"#]);
    assert_eq!(stdout(&o), "d : { string -> int }\nr : <c: real>\n{ string -> <c: real> }\n");
}

#[test]
fn gmb_program_runs_from_a_file() {
    let mut args = gmb_loads();
    args.push(fixture("gmb.sdql").display().to_string());
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let plain = sdql(&args);
    assert_eq!(plain.status.code(), Some(0), "{}", String::from_utf8_lossy(&plain.stderr));
    let mut with_rules = args.clone();
    with_rules.extend(["--rules", "all"]);
    assert_eq!(stdout(&plain), stdout(&sdql(&with_rules)));
    assert!(stdout(&plain).contains(r#"<gene="NOTCH2", burden=2.0> -> 1"#));
}

fn loop_iterations(text: &str) -> u64 {
    let line = text.lines().find(|l| l.starts_with("metrics:")).expect("metrics line");
    let field = line.split_whitespace().find_map(|f| f.strip_prefix("loop_iterations=")).unwrap();
    field.parse().unwrap()
}

/// A random 32x32 matrix in the COO text format.
fn coo_file(dir: &tempfile::TempDir) -> std::path::PathBuf {
    use std::fmt::Write as _;
    let entries = sdql_gen::data::sparse_matrix(&mut sdql_gen::rng(7), 32, 32, 0.1);
    let mut text = String::from("32 32\n");
    for (r, c, x) in entries {
        writeln!(text, "{r} {c} {x}").unwrap();
    }
    let path = dir.path().join("m.coo");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn curried_covariance_loops_less_than_flat() {
    let dir = tempfile::tempdir().unwrap();
    let m = coo_file(&dir);
    let run = |layout: &str| {
        let load = format!("M={}:coo-{layout}:int", m.display());
        let o = sdql(&["--metrics", "--load", &load, "-e", &format!("la[{layout}]: matmul(transpose(M), M)")]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    let (flat, curried) = (run("flat"), run("curried"));
    let (f, c) = (loop_iterations(&flat), loop_iterations(&curried));
    assert!(c < f, "curried {c} vs flat {f}");
}

#[test]
fn explain_and_emit_ast() {
    let src = "let R = { 1 -> 2, 2 -> 1 }; let R1 = sum(r in R) { r.key + 1 -> r.val } in sum(r1 in R1) { r1.key * 2 -> r1.val }";
    let o = sdql(&["--rules", "all", "--explain", "--emit-ast", "-e", src]);
    let out = stdout(&o);
    assert!(out.contains("rewrite vertical-key (pass 1)"), "{out}");
    assert!(out.lines().any(|l| l == "sum(r in R) { (r.key + 1) * 2 -> r.val }"), "{out}");
    assert!(out.ends_with("{ 4 -> 2, 6 -> 1 }\n"), "{out}");
}

#[test]
fn trace_steps_ends_in_the_value() {
    let o = sdql(&["--trace-steps", "-e", "sum(x in { 1 -> 2, 3 -> 4 }) x.val * x.key"]);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines.len() > 3, "{out}");
    assert_eq!(lines[lines.len() - 2..], ["14", "14"]);
}

#[test]
fn layouts_do_not_change_answers() {
    let genes = format!("Genes={}:set:{GENES_SCHEMA}", fixture("genes.csv").display());
    let q = "sum(g in Genes) if (g.key.contig == 17) then { g.key.name -> g.key.start } else { }";
    let outs: Vec<String> = ["dict", "row", "columnar"]
        .iter()
        .map(|l| stdout(&sdql(&["--load", &genes, "--layout", &format!("Genes={l}"), "-e", q])))
        .collect();
    assert_eq!(outs[0], r#"{ "BRCA1" -> 43044295, "TP53" -> 7565097 }"#.to_string() + "\n");
    assert!(outs.iter().all(|o| *o == outs[0]), "{outs:?}");
}

#[test]
fn repl_reads_standard_input() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_sdql"))
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b":t { \"a\" -> 2 }\nlet x = 3\nx * 2\n:q\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(stdout(&out), "{ string -> int }\nx : int\n6\n");
}
