use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_colombeau"))
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).arg("--out").arg(out).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.json");
    fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn sorted_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn flat_scenario_passes_with_identity_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(&["all"], &scenario_dir().join("flat.json"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let geo = fs::read_to_string(out.join("geodesic_0.csv")).unwrap();
    let mut lines = geo.lines();
    assert_eq!(lines.next(), Some("epsilon,u,x,y,v,xdot,ydot"));
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(&f[2..], &[1.0, 0.0, 0.0, 0.0, 0.0], "{line}");
    }
    let shadow = fs::read_to_string(out.join("shadow.csv")).unwrap();
    assert!(shadow.starts_with("epsilon,component,sup_distance\n"));
    assert!(shadow.lines().skip(1).all(|l| l.ends_with(",0.0000000000000000e0")), "{shadow}");

    let diffeo = json(&out.join("diffeo.json"));
    for row in diffeo["rows"].as_array().unwrap() {
        assert_eq!(row["min_abs_det"], 1.0);
    }
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["stages"].as_array().unwrap().len(), 7);
    assert!(m["failures"].as_array().unwrap().is_empty());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = scenario_dir().join("flat.json");
    assert_eq!(run(&["all"], &cfg, &a).status.code(), Some(0));
    assert_eq!(run(&["all", "--jobs", "1"], &cfg, &b).status.code(), Some(0));
    let (fa, fb) = (sorted_files(&a), sorted_files(&b));
    assert_eq!(fa.iter().map(|p| p.file_name()).collect::<Vec<_>>(), fb.iter().map(|p| p.file_name()).collect::<Vec<_>>());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn plane_wave_geodesic_refracts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"name": "pw"}"#);
    let out = tmp.path().join("out");
    let o = run(&["geodesic", "--format", "json"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("geodesic_0.csv").exists());
    let t = json(&out.join("geodesic_0.json"));
    assert_eq!(t["columns"], serde_json::json!(["epsilon", "u", "x", "y", "v", "xdot", "ydot"]));
    let last = t["rows"].as_array().unwrap().last().unwrap();
    assert_eq!(last["u"], 1.0);
    // x(1) → 1 + u₊ = 2, v jumps by f(1, 0) = 1 and then grows by ¼|∇f|² u₊ = 1
    assert!((last["x"].as_f64().unwrap() - 2.0).abs() < 1e-3, "{last}");
    assert!((last["v"].as_f64().unwrap() - 2.0).abs() < 2e-3, "{last}");
    assert_eq!(t["provenance"]["scenario"], "pw");
    assert_eq!(t["provenance"]["schedule"].as_array().unwrap().len(), 8);
    let lim = json(&out.join("geodesic_limit.json"));
    let v_jump = lim["rows"].as_array().unwrap().iter().find(|r| r["quantity"] == "v_jump").unwrap();
    assert!((v_jump["extrapolated"].as_f64().unwrap() - 1.0).abs() < 1e-5, "{v_jump}");
}

#[test]
fn epsilon_outside_unit_interval_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"name": "bad", "schedule": {"epsilons": [0.5, 0.25, 1.5]}}"#);
    let o = run(&["geodesic"], &cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("schedule.epsilons[2]"), "{err}");
}

#[test]
fn malformed_fields_report_their_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"name": "x", "boxes": {"omega": {"lower": [-1, -1, -1], "upper": [0.9, 1, 1]}}}"#, "boxes.omega.lower"),
        (r#"{"name": "x", "geodesic": {"initial_data": [[1, 0, "a"]]}}"#, "geodesic.initial_data[0][2]"),
        (r#"{"name": "x", "mollifier": {"kind": "tophat"}}"#, "mollifier.kind"),
        (r#"{"name": "x", "schedule": {"epsilons": [0.25, 0.5]}}"#, "schedule.epsilons[1]"),
        (r#"{"name": "x", "extra": 1}"#, "extra"),
        (r#"{"profile": {"kind": "zero"}}"#, "name"),
    ];
    for (text, path) in cases {
        let cfg = write_config(tmp.path(), text);
        let o = run(&["curvature"], &cfg, &tmp.path().join("out"));
        assert_eq!(o.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(path), "{text}: {err}");
    }
}

#[test]
fn caustic_box_is_a_verdict_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
            "name": "focal",
            "schedule": {"epsilons": [0.03125, 0.015625, 0.0078125, 0.00390625]},
            "boxes": {"omega": {"lower": [-1, -1, -1, -1], "upper": [1, 1, 1, 1]}},
            "sampling": {"diffeo_cells": 2}
        }"#,
    );
    let out = tmp.path().join("out");
    let o = run(&["verify-diffeo"], &cfg, &out);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out.join("diffeo_summary.json"));
    assert_eq!(s["rows"][0]["witness_u"], 1.0);
    assert_eq!(s["rows"][0]["passed"], false);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["failures"][0]["stage"], "verify-diffeo");
    assert_eq!(m["failures"][0]["failed_checks"][0], "generalized_diffeomorphism");
}

#[test]
fn solver_breakdown_is_a_numerical_failure_with_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
            "name": "stiff",
            "profile": {"kind": "polynomial", "terms": [{"i": 6, "j": 0, "c": 1e8}]},
            "schedule": {"epsilons": [0.125, 0.0625]},
            "curvature": {"samples": 5},
            "outputs": ["curvature", "geodesic"]
        }"#,
    );
    let out = tmp.path().join("out");
    let o = run(&["all"], &cfg, &out);
    assert_eq!(o.status.code(), Some(3));
    assert!(out.join("curvature.csv").exists());
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["stages"][0]["status"], "pass");
    assert_eq!(m["stages"][1]["status"], "numerical_failure");
    assert!(m["failures"][0]["error"].as_str().unwrap().contains("failed"));
}

#[test]
fn seed_changes_samples_and_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"name": "s", "schedule": {"epsilons": [0.1]}, "curvature": {"samples": 3}}"#);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&["curvature", "--format", "csv", "--seed", "1"], &cfg, &a).status.code(), Some(0));
    assert_eq!(run(&["curvature", "--format", "csv", "--seed", "2"], &cfg, &b).status.code(), Some(0));
    assert_ne!(fs::read(a.join("curvature.csv")).unwrap(), fs::read(b.join("curvature.csv")).unwrap());
    let (pa, pb) = (json(&a.join("provenance.json")), json(&b.join("provenance.json")));
    assert_ne!(pa["scenario_hash"], pb["scenario_hash"]);
    assert!(!a.join("curvature.json").exists());
}

#[test]
fn bundled_scenarios_and_schema_parse() {
    let schema: Value = serde_json::from_str(&fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenario.schema.json")).unwrap()).unwrap();
    assert_eq!(schema["required"][0], "name");
    for entry in fs::read_dir(scenario_dir()).unwrap() {
        let v = json(&entry.unwrap().path());
        assert!(v["name"].is_string());
    }
}
