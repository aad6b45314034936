use serde_json::{json, Value};
use shockrom::experiments::{execute, find_scenario, run, sidecar_path, Pipeline, Scenario};
use shockrom::Category;

fn small(name: &str, overrides: Value) -> Scenario {
    let s = find_scenario(name).unwrap().with_overrides(&overrides).unwrap();
    s.validate().unwrap();
    s
}

fn shock() -> Scenario {
    small("riemann-shock", json!({ "cells": 400, "steps": 500, "snapshots": 50 }))
}

fn sine() -> Scenario {
    // the sine breaks at t = 1; stop short of it on this coarse grid
    small("smooth-sine", json!({ "cells": 400, "steps": 200, "snapshots": 50, "t_train": 0.2, "t_predict": 0.8 }))
}

#[test]
fn physics_pipeline_keeps_the_shock_on_a_coarse_grid() {
    let r = run(&shock(), Pipeline::PhysicsDmd).unwrap();
    let d = &r.diagnostics;
    assert_eq!(d.reference, "analytic");
    assert_eq!(d.rom.rank, Some(2));
    assert_eq!(r.times.len(), 5);
    // Burgers shock from 2 to 0 moves at unit speed
    let dx = d.grid.dx();
    for (t, x) in r.times.iter().zip(&d.rom.shock_positions) {
        let x = x.expect("shock after breaking");
        assert!((x - t).abs() <= 2.0 * dx, "shock at {x} for t = {t}");
    }
    assert!(d.rom.errors.iter().all(|&e| e < 0.05), "{:?}", d.rom.errors);
}

#[test]
fn every_pipeline_runs_on_smooth_data() {
    let s = sine();
    for p in Pipeline::ALL {
        let r = run(&s, p).unwrap();
        assert_eq!(r.rom.len(), r.reference.len());
        let last = *r.diagnostics.rom.errors.last().unwrap();
        assert!(last < 0.05, "{p}: {last:e}");
    }
}

#[test]
fn runs_are_deterministic() {
    let s = sine();
    let a = run(&s, Pipeline::PhysicsDmd).unwrap();
    let b = run(&s, Pipeline::PhysicsDmd).unwrap();
    for (x, y) in a.rom.iter().zip(&b.rom) {
        assert_eq!(x.values, y.values);
    }
}

#[test]
fn execute_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("shock.csv");
    let s = shock();
    let report = execute(&s, Pipeline::PhysicsDmd, &out).unwrap();

    let mut rd = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["t", "x", "u_ref", "u_rom"]);
    let rows: Vec<Vec<f64>> = rd.records().map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), report.times.len() * s.cells);
    assert!(rows.iter().flatten().all(|v| v.is_finite()));
    assert_eq!(rows[0][1], s.domain[0]);
    assert_eq!(rows[s.cells - 1][1], s.domain[1]);

    let side: Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&out)).unwrap()).unwrap();
    assert_eq!(side["pipeline"], "physics-dmd");
    assert_eq!(side["scenario"]["name"], "riemann-shock");
    assert_eq!(side["rom"]["rank"], 2);
    assert!(side["layout"]["shock_slots"].as_array().unwrap().len() == 1);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("x.csv");
    let e = execute(&shock(), Pipeline::PhysicsDmd, &out).unwrap_err();
    assert_eq!(e.category(), Category::Io);
    assert!(e.to_string().contains("riemann-shock"));
}

#[test]
fn bad_configurations_are_rejected() {
    let base = find_scenario("smooth-sine").unwrap();
    for o in [
        json!({ "t_train": 2.0 }),
        json!({ "snapshots": 2 }),
        json!({ "eps": 1.5 }),
        json!({ "outputs": 7 }),
        json!({ "snapshots": 300 }),
        json!({ "delta": -1.0 }),
    ] {
        let s = base.with_overrides(&o).unwrap();
        assert_eq!(s.validate().unwrap_err().category(), Category::Config, "{o}");
    }
    assert!(base.with_overrides(&json!({ "nonsense": 1 })).is_err());
    assert!(base.with_overrides(&json!([1, 2])).is_err());
    let analytic_sine = base.with_overrides(&json!({ "source": "analytic" })).unwrap();
    assert!(analytic_sine.validate().is_err());
}

#[test]
fn baseline_lagrangian_dmd_fails_across_the_shock() {
    let r = run(&shock(), Pipeline::LagrangianDmd).unwrap();
    // nodes keep their values, so the step cannot sharpen into a moving shock
    assert!(*r.diagnostics.rom.errors.last().unwrap() > 0.1);
}
