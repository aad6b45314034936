use std::path::Path;
use std::process::{Command, Output};

fn shockrom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shockrom")).args(args).output().unwrap()
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("small.json");
    std::fs::write(&p, r#"{ "cells": 400, "steps": 500, "snapshots": 50 }"#).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().find(|l| l.starts_with('{')).expect("JSON error line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn list_shows_every_builtin() {
    let o = shockrom(&["list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["riemann-shock", "riemann-rarefaction", "smooth-sine", "gaussian-mixed", "buckley-leverett"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("shock.csv");
    let cfg = small_config(dir.path());
    let o = shockrom(&[
        "run",
        "--scenario",
        "riemann-shock",
        "--pipeline",
        "physics-dmd",
        "--out",
        out.to_str().unwrap(),
        "--json-config",
        &cfg,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("rank 2"));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next(), Some("t,x,u_ref,u_rom"));
    assert_eq!(csv.lines().count(), 1 + 5 * 400);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("shock.diagnostics.json")).unwrap()).unwrap();
    assert_eq!(side["scenario"]["cells"], 400);
}

#[test]
fn several_scenarios_fill_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let cfg = dir.path().join("small.json");
    std::fs::write(&cfg, r#"{ "cells": 400, "steps": 200, "snapshots": 50, "t_train": 0.2, "t_predict": 0.8 }"#)
        .unwrap();
    let o = shockrom(&[
        "run",
        "--scenario",
        "smooth-sine",
        "--scenario",
        "riemann-rarefaction",
        "--pipeline",
        "physics-dmd",
        "--out",
        out.to_str().unwrap(),
        "--json-config",
        cfg.to_str().unwrap(),
        "--delta",
        "0.01",
        "--parallel",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["smooth-sine-physics-dmd.csv", "riemann-rarefaction-physics-dmd.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn unknown_scenario_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = shockrom(&["run", "--scenario", "nope", "--pipeline", "physics-dmd", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "config");
    assert!(e["message"].as_str().unwrap().contains("nope"));
}

#[test]
fn bad_eps_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = shockrom(&[
        "run",
        "--scenario",
        "riemann-shock",
        "--pipeline",
        "physics-dmd",
        "--out",
        out.to_str().unwrap(),
        "--eps",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("x.csv");
    let cfg = small_config(dir.path());
    let o = shockrom(&[
        "run",
        "--scenario",
        "riemann-shock",
        "--pipeline",
        "physics-dmd",
        "--out",
        out.to_str().unwrap(),
        "--json-config",
        &cfg,
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_json(&o)["error"], "io");
}

#[test]
fn unreadable_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let missing = dir.path().join("absent.json");
    let o = shockrom(&[
        "run",
        "--scenario",
        "riemann-shock",
        "--pipeline",
        "physics-dmd",
        "--out",
        out.to_str().unwrap(),
        "--json-config",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
}
