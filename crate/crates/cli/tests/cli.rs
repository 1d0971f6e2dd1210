use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finalg")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("missing key {key} in\n{text}"))
}

#[test]
fn analyze_reports_quotient_warning() {
    let text = stdout(&["analyze", &data("unary_quotient.alg"), "--format", "kv"]);
    assert_eq!(value(&text, "in_kpoly"), "true");
    assert_eq!(value(&text, "in_ksurj"), "true");
    assert_eq!(value(&text, "has_nontrivial_strongly_abelian"), "false");
    let idx = text.lines().position(|l| l == "quotient.1.congruence=0,1|2").expect("alpha listed");
    assert!(text.lines().nth(idx + 1).unwrap().ends_with("strongly_abelian=false"));
    assert_eq!(value(&text, "quotient.1.snag_pair"), "0,1");
    assert_eq!(value(&text, "quotient.1.quotient_in_ksurj"), "false");
    let plain = stdout(&["analyze", &data("unary_quotient.alg")]);
    assert!(plain.contains("warning: quotient has a nontrivial strongly abelian congruence"));
}

#[test]
fn analyze_with_tct() {
    let text = stdout(&["analyze", &data("simple_unary_sub.alg"), "--tct", "--format", "kv"]);
    assert_eq!(value(&text, "in_kpoly"), "false");
    assert_eq!(value(&text, "subalgebra_universe"), "0,1");
    assert!(value(&text, "tct.0").ends_with("type 3"));
}

#[test]
fn methods_agree() {
    for (from, to) in [("rps.alg", "rps.alg"), ("chain4.alg", "sl2.alg"), ("sl2.alg", "rps.alg")] {
        let lists: Vec<String> = ["brute", "pieces", "auto"]
            .iter()
            .map(|m| stdout(&["enumerate", "--from", &data(from), "--to", &data(to), "--method", m]))
            .collect();
        assert_eq!(lists[0], lists[1], "{from} -> {to}");
        assert_eq!(lists[0], lists[2], "{from} -> {to}");
    }
    let special = stdout(&["enumerate", "--from", &data("chain4.alg"), "--to", &data("sl2.alg"), "--method", "special"]);
    let brute = stdout(&["enumerate", "--from", &data("chain4.alg"), "--to", &data("sl2.alg"), "--method", "brute"]);
    assert_eq!(special, brute);
    let count = stdout(&["count", "--from", &data("rps.alg"), "--to", &data("rps.alg"), "--method", "pieces"]);
    assert_eq!(value(&count, "homs"), "6");
    assert_eq!(value(&count, "surjective_homs"), "3");
}

#[test]
fn surjective_lists_only_onto_maps() {
    let text = stdout(&["surjective", "--from", &data("chain4.alg"), "--to", &data("sl2.alg")]);
    assert_eq!(value(&text, "count"), "3");
    assert!(text.lines().filter(|l| l.starts_with("hom=")).all(|l| l.contains('0') && l.contains('1')));
}

#[test]
fn chain_profile_is_n_plus_one() {
    let text = stdout(&["profile", "--family", "chain", "--to", &data("sl2.alg"), "--max", "10"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,size,homs,surjective_homs"));
    for (i, line) in lines.enumerate() {
        let cols: Vec<u64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[0], i as u64 + 1);
        assert_eq!(cols[2], cols[0] + 1);
    }
    let dir = std::env::temp_dir().join(format!("finalg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("p.csv");
    let pieces = stdout(&[
        "profile", "--family", "chain", "--to", &data("sl2.alg"), "--max", "6", "--method", "pieces", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(pieces.is_empty());
    let written = std::fs::read_to_string(&csv).unwrap();
    assert!(written.starts_with("n,size,homs,surjective_homs,max_candidates\n"));
    assert!(written.lines().nth(6).unwrap().starts_with("6,6,7,5,"));
}

#[test]
fn reduction_decides_instances() {
    let sat = stdout(&["reduce1in3", "--inst", &data("sat.cnf"), "--to", &data("abelian_block.alg"), "--pair", "0,1"]);
    assert_eq!(value(&sat, "satisfiable"), "true");
    let bits: Vec<bool> = value(&sat, "assignment").split(',').map(|b| b == "1").collect();
    for clause in [[0, 1, 2], [1, 2, 3]] {
        assert_eq!(clause.iter().filter(|&&v| bits[v]).count(), 1);
    }
    let size: u64 = value(&sat, "free_size").parse().unwrap();
    assert!(size <= value(&sat, "bound").parse().unwrap());
    let unsat =
        stdout(&["reduce1in3", "--inst", &data("unsat.cnf"), "--to", &data("abelian_block.alg"), "--pair", "0,1"]);
    assert_eq!(value(&unsat, "satisfiable"), "false");
}

#[test]
fn emitted_algebras_parse_back() {
    let dir = std::env::temp_dir().join(format!("finalg-emit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("f.alg");
    let text = stdout(&["abfree", "--to", &data("abelian_block.alg"), "--pair", "0,1", "--n", "3", "--emit", f.to_str().unwrap()]);
    assert_eq!(value(&text, "generators").split(',').count(), 3);
    let lattice = stdout(&["lattice", f.to_str().unwrap()]);
    assert!(lattice.starts_with("c0 = "));
    let mp = stdout(&["matrixpower", "--y", "2", "--k", "2", "--emit"]);
    assert_eq!(value(&mp, "size"), "4");
    let body = mp.split_once('\n').unwrap().1;
    assert!(finalg::format::parse_algebra(body).is_ok());
    let free = stdout(&["free", "--to", &data("sl2.alg"), "--n", "2"]);
    assert_eq!(value(&free, "size"), "3");
}

#[test]
fn exit_codes() {
    let dir = std::env::temp_dir().join(format!("finalg-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.alg");
    std::fs::write(&bad, "algebra bad\nsize 2\nop mul 2\n0 1 5 0\n").unwrap();
    let out = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.alg") && err.contains("line 4"), "{err}");
    assert_eq!(run(&["analyze", "/nonexistent.alg"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", &data("sl2.alg"), "--bogus"]).status.code(), Some(2));
    let mismatch = run(&["count", "--from", &data("sl2.alg"), "--to", &data("z3.alg")]);
    assert_eq!(mismatch.status.code(), Some(1));
    let na = run(&["count", "--from", &data("sl2.alg"), "--to", &data("abelian_block.alg"), "--method", "special"]);
    assert_eq!(na.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&na.stderr).contains("not applicable"));
}

#[test]
fn output_is_deterministic() {
    let args = ["analyze", &data("rps.alg"), "--tct"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = ["count", "--from", &data("rps.alg"), "--to", &data("rps.alg"), "--trace-pieces"];
    let (a, b) = (stdout(&args), stdout(&args));
    assert_eq!(a, b);
    assert_eq!(value(&a, "homs"), "6");
}
