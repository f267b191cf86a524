use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(format!("{}.json", name))
}

fn solvstruct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solvstruct")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn counts() {
    for (k, n) in [("1", "1"), ("2", "5"), ("3", "17")] {
        let o = solvstruct(&["count", k, "--format", "json"]);
        assert_eq!(code(&o), 0);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["closed_form"].to_string(), n);
        assert_eq!(v["agree"], true);
    }
    assert_eq!(code(&solvstruct(&["count", "0"])), 2);
}

#[test]
fn example1_passes_every_command() {
    let f = fixture("example1");
    for cmd in ["check", "reduce", "verify"] {
        let o = solvstruct(&[cmd, f.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}: {}", cmd, String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn reports_are_deterministic() {
    let f = fixture("example2");
    for cmd in ["reduce", "verify"] {
        let a = solvstruct(&[cmd, f.to_str().unwrap(), "--format", "json", "--seed", "7"]);
        let b = solvstruct(&[cmd, f.to_str().unwrap(), "--format", "json", "--seed", "7"]);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{} output differs between runs", cmd);
        let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
        assert_eq!(v["pass"], true);
    }
}

#[test]
fn sequential_matches_parallel() {
    let f = fixture("example3");
    let a = solvstruct(&["verify", f.to_str().unwrap(), "--format", "json"]);
    let b = solvstruct(&["verify", f.to_str().unwrap(), "--format", "json", "--sequential"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = write(&dir, "bad.json", "{\"ode\": ");
    let bad_coord = write(&dir, "coord.json", r#"{"ode": {"order": 1, "f": "u"}, "structure": [{"v": "1"}]}"#);
    let bad_expr = write(&dir, "expr.json", r#"{"ode": {"order": 1, "f": "u +"}}"#);
    for f in [&bad_json, &bad_coord, &bad_expr] {
        let o = solvstruct(&["check", f]);
        assert_eq!(code(&o), 2, "{}: {}", f, String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(code(&solvstruct(&["check", "/nonexistent/problem.json"])), 2);
    assert_eq!(code(&solvstruct(&["check"])), 2);
}

#[test]
fn failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    // u is not a symmetry generator of u' = x
    let f = write(&dir, "wrong.json", r#"{"ode": {"order": 1, "f": "x"}, "symmetries": [{"name": "S", "phi": "u"}], "structure": ["S"]}"#);
    assert_eq!(code(&solvstruct(&["check", &f])), 1);
    // the remark only reduces partially
    assert_eq!(code(&solvstruct(&["reduce", fixture("remark").to_str().unwrap()])), 1);
}

#[test]
fn empty_structure_checks_symmetries_only() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "sym.json", r#"{"ode": {"order": 1, "f": "u"}, "symmetries": [{"name": "S", "phi": "u"}]}"#);
    let o = solvstruct(&["check", &f, "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["structure"].is_null());
    assert_eq!(v["symmetries"][0]["ok"], true);
    let o = solvstruct(&["reduce", &f]);
    assert_eq!(code(&o), 1);
}
