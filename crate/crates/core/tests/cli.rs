//! Command-line behavior and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn vineyard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vineyard")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("vineyard-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn generate_then_lambda_prints_the_twist() {
    let out = scratch("tw.json");
    assert!(vineyard(&["generate", "annulus", "--twisted", "-o", s(&out)]).status.success());
    let l = vineyard(&["lambda", s(&out)]);
    assert!(l.status.success());
    assert!(stdout(&l).lines().any(|line| line == "t=3 k=0 l=1 value=1"));
    let j = vineyard(&["lambda", "--json", s(&out)]);
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v["lambda"][0]["value"], "1");
    assert_eq!(v["lambda"][0]["time"], "3");
}

#[test]
fn trivial_exit_codes() {
    let obf = scratch("obf.json");
    let gen = vineyard(&["generate", "random", "--seed", "11", "--obfuscate", "-o", s(&obf)]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    assert_eq!(vineyard(&["trivial", s(&obf)]).status.code(), Some(0));
    assert_eq!(vineyard(&["trivial", &fixture("annulus_twisted.json")]).status.code(), Some(1));
    let j = vineyard(&["trivial", "--json", &fixture("annulus.json")]);
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v["trivial"], true);
    assert_eq!(v["witness_verified"], true);
}

#[test]
fn validate_reports_located_problem() {
    let o = vineyard(&["validate", &fixture("invalid_inadmissible.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("alpha[0]: entry (0,1)"), "{}", stdout(&o));
    assert_eq!(vineyard(&["validate", &fixture("annulus.json")]).status.code(), Some(0));
    let missing = vineyard(&["validate", "/nonexistent/file.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(!missing.stderr.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(vineyard(&[]).status.code(), Some(2));
    assert_eq!(vineyard(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(vineyard(&["generate", "random", "--field", "gf4", "-o", "x"]).status.code(), Some(2));
}

#[test]
fn oracle_agrees_and_refuses_large_input() {
    assert_eq!(vineyard(&["oracle", &fixture("random_gf2_stuck.json")]).status.code(), Some(1));
    assert_eq!(vineyard(&["oracle", &fixture("random_gf2_window.json")]).status.code(), Some(0));
    let big = vineyard(&["oracle", &fixture("annulus_twisted.json")]);
    assert_eq!(big.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&big.stderr).contains("refused"));
    assert_eq!(vineyard(&["oracle", &fixture("random_q.json")]).status.code(), Some(3));
}

#[test]
fn decompose_and_simplify() {
    let d = vineyard(&["decompose", &fixture("annulus_twisted.json")]);
    assert_eq!(stdout(&d).trim(), "{0,1}");
    let d = vineyard(&["decompose", "--json", &fixture("annulus.json")]);
    let v: serde_json::Value = serde_json::from_slice(&d.stdout).unwrap();
    assert_eq!(v["blocks"], serde_json::json!([[0], [1]]));

    let out = scratch("simple.json");
    assert!(vineyard(&["simplify", &fixture("annulus_twisted.json"), "-o", s(&out)]).status.success());
    let first = std::fs::read_to_string(&out).unwrap();
    let again = scratch("simple2.json");
    assert!(vineyard(&["simplify", s(&out), "-o", s(&again)]).status.success());
    assert_eq!(first, std::fs::read_to_string(&again).unwrap());
    for pass in ["forward", "backward"] {
        let o = scratch(&format!("{pass}.json"));
        assert!(vineyard(&["simplify", &fixture("annulus_twisted.json"), "--pass", pass, "-o", s(&o)])
            .status
            .success());
        assert_eq!(vineyard(&["validate", s(&o)]).status.code(), Some(0));
    }
}

#[test]
fn same_input_same_bytes() {
    let a = vineyard(&["generate", "random", "--seed", "21", "--obfuscate", "--twists", "2", "-o", "-"]);
    let b = vineyard(&["generate", "random", "--seed", "21", "--obfuscate", "--twists", "2", "-o", "-"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn render_writes_svg() {
    let out = scratch("a.svg");
    assert!(vineyard(&["render", &fixture("annulus.json"), "-o", s(&out)]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("<svg"));
}
