//! Runs the built binary the way a shell user would.

use std::io::Write;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

const BIN: &str = env!("CARGO_BIN_EXE_probslice");

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

#[test]
fn slice_output_pipes_into_validate() {
    let sliced = run(&["slice", &fixture("ex1.cfg")]);
    assert!(sliced.status.success());
    let mut child = Command::new(BIN)
        .args(["validate", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&sliced.stdout).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("valid"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let ex1 = fixture("ex1.cfg");
    for args in [
        vec!["analyze", ex1.as_str()],
        vec!["check", ex1.as_str(), "--k", "4", "--format", "json"],
        vec!["simulate", ex1.as_str(), "--samples", "2000", "--seed", "9", "--format", "json"],
        vec!["iterate", ex1.as_str(), "--k", "3", "--format", "json"],
    ] {
        assert_eq!(run(&args).stdout, run(&args).stdout, "{args:?}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["check", &fixture("ex1.cfg")]).status.code(), Some(0));
    assert_eq!(run(&["check", &fixture("ex1-unsound.cfg"), "--k", "3"]).status.code(), Some(1));
    let bad = run(&["iterate", &fixture("ex1.cfg"), "--k", "2", "--from", "bb", "--to", "incq"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("universe"));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn readme_commands_are_quick() {
    let ex1 = fixture("ex1.cfg");
    let commands: Vec<Vec<&str>> = vec![
        vec!["analyze", &ex1],
        vec!["slice", &ex1],
        vec!["modify", &ex1],
        vec!["iterate", &ex1, "--from", "start", "--to", "end", "--k", "6", "--project", "b,q"],
        vec!["check", &ex1, "--k", "6"],
        vec!["check", &ex1, "--k", "6", "--no-modify"],
        vec!["simulate", &ex1, "--samples", "100000", "--seed", "42", "--max-steps", "1000", "--project", "b,q", "--compare-k", "20"],
    ];
    for args in commands {
        let t = Instant::now();
        let out = run(&args);
        assert!(out.status.code().is_some_and(|c| c <= 1), "{args:?}");
        assert!(t.elapsed() < Duration::from_secs(10), "{args:?} took {:?}", t.elapsed());
    }
}
