//! Command-line contract of `smm`: flags, exit codes, output files and manifests.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn smm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smm"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("SMM_OUTDIR")
        .output()
        .expect("spawn smm")
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV with `#` metadata lines and a header.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(smm(dir.path(), &["validate", &cfg("gaussian.json")]).status.code(), Some(0));

    let bad = dir.path().join("neg.json");
    std::fs::write(&bad, r#"{"reg":[0,1],"singularities":[{"b":[0,0],"alpha":-0.5}],"support":[["-inf","inf"]]}"#).unwrap();
    let o = smm(dir.path(), &["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha"), "{}", stderr(&o));

    let o = smm(dir.path(), &["validate", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(smm(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(smm(dir.path(), &["sample", &cfg("gaussian.json"), "--seed", "1"]).status.code(), Some(1));
    assert_eq!(smm(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn equilibrium_gue_density_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = smm(dir.path(), &["equilibrium", &cfg("gaussian.json"), "--grid", "-2:2:5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("density.csv")).unwrap();
    let zero = rows(&csv).into_iter().find(|r| r[0].parse::<f64>().unwrap() == 0.0).unwrap();
    let rho: f64 = zero[1].parse().unwrap();
    assert!((rho - 1.0 / std::f64::consts::PI).abs() < 1e-12, "{rho}");

    let m = json(dir.path().join("manifest-equilibrium.json"));
    let listed: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(listed, ["density.csv", "variational.csv", "equilibrium.json"]);
    assert_eq!(m["overrides"]["grid"], "-2:2:5");
    assert_eq!(m["exit_code"], 0);
    assert!(m["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn equilibrium_quartic_reports_h_and_infeasible_structure_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = smm(dir.path(), &["equilibrium", &cfg("quartic_critical.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let eq = json(dir.path().join("equilibrium.json"));
    assert_eq!(eq["h"], "x^2");
    assert_eq!(eq["variational"]["pass"], true);

    let o = smm(dir.path(), &["equilibrium", &cfg("gaussian.json"), "--structure", "symmetric_two_cut"]);
    assert_ne!(o.status.code(), Some(0));
    let o = smm(dir.path(), &["equilibrium", &cfg("gaussian.json"), "--structure", "three_cut"]);
    assert_eq!(o.status.code(), Some(2));
}

fn points(v: &Value) -> Vec<(f64, String, i64)> {
    v["critical_points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["x_star"].as_f64().unwrap(), c["kind"].as_str().unwrap().to_string(), c["order_k"].as_i64().unwrap()))
        .collect()
}

#[test]
fn classify_configs_and_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(smm(dir.path(), &["classify", &cfg("gaussian.json")]).status.code(), Some(0));
    let gue = json(dir.path().join("classify.json"));
    let pts = points(&gue);
    assert_eq!(pts.len(), 2);
    for (x, kind, k) in &pts {
        assert_eq!((kind.as_str(), *k), ("edge", 0));
        assert!((x.abs() - 2.0).abs() < 1e-10);
    }

    assert_eq!(smm(dir.path(), &["classify", &cfg("laguerre.json")]).status.code(), Some(0));
    let mp = json(dir.path().join("classify.json"));
    let hard = mp["model_data"].as_array().unwrap().iter().find(|m| m["order_k"] == -1).unwrap();
    assert_eq!((hard["delta"]["num"].as_i64(), hard["delta"]["den"].as_i64()), (Some(2), Some(1)));
    assert!((hard["tau_inf"][0].as_f64().unwrap() + 1.0).abs() < 1e-10);

    let o = smm(dir.path(), &["classify", "--scenario", "quartic-merge", "--tau", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let q = json(dir.path().join("classify.json"));
    let md = &q["model_data"][0];
    assert_eq!(md["kind"], "interior");
    assert_eq!((md["delta"]["num"].as_i64(), md["delta"]["den"].as_i64()), (Some(1), Some(3)));
    assert!((md["tau_inf"][3].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!(md["tau_inf"][2].as_f64().unwrap().abs() < 1e-8);

    let o = smm(dir.path(), &["classify", "--scenario", "no-such-thing"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kernel_grid_trace_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let o = smm(dir.path(), &["kernel", &cfg("gaussian.json"), "--n", "12", "--grid", "-2:2:7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let grid = rows(&std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap());
    assert_eq!(grid.len(), 49);
    let at = |i: usize, j: usize| grid[7 * i + j][2].clone();
    for i in 0..7 {
        for j in 0..7 {
            assert_eq!(at(i, j), at(j, i));
        }
    }
    let trace_rows = rows(&std::fs::read_to_string(dir.path().join("kernel_trace.csv")).unwrap());
    let total: f64 = trace_rows.iter().map(|r| r[3].parse::<f64>().unwrap()).sum();
    assert!((total - 12.0).abs() < 1e-8 * 12.0, "{total}");

    let o = smm(dir.path(), &["kernel", &cfg("laguerre.json"), "--n", "20", "--grid", "-1:1:5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for r in rows(&std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap()) {
        let (u, v): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        if u > 0.0 || v > 0.0 {
            assert_eq!(r[3], "1");
            assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
        } else {
            assert_eq!(r[3], "0");
        }
    }
}

#[test]
fn converge_scans() {
    let dir = tempfile::tempdir().unwrap();
    let o = smm(dir.path(), &["converge", "gue-bulk", "--n-list", "20,40,80"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let scan = json(dir.path().join("converge.json"));
    assert_eq!(scan["decreasing"], true);
    assert_eq!(scan["reference"]["kind"], "sine");

    let o = smm(dir.path(), &["converge", "quartic-merge", "--n-list", "30,60,120"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let scan = json(dir.path().join("converge.json"));
    assert_eq!(scan["reference"]["kind"], "self_collapse");
    let rows = scan["rows"].as_array().unwrap();
    assert!(rows[0]["sup_error"].is_null());
    let (d1, d2) = (rows[1]["sup_error"].as_f64().unwrap(), rows[2]["sup_error"].as_f64().unwrap());
    assert!(d2 < d1, "{d1} {d2}");

    assert_eq!(smm(dir.path(), &["converge", "gue-nowhere"]).status.code(), Some(2));
}

#[test]
fn sample_is_reproducible_and_close_to_semicircle() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["sample", &cfg("gaussian.json"), "--steps", "6000", "--seed", "11", "--threads", "2"];
    for d in [&a, &b] {
        let o = smm(d.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(a.path(), "samples.csv"), read(b.path(), "samples.csv"));
    assert_eq!(read(a.path(), "histogram.csv"), read(b.path(), "histogram.csv"));
    let cmp = json(a.path().join("comparison.json"));
    assert!(cmp["deviation"]["l1_dev"].as_f64().unwrap() < 0.08, "{cmp}");
    let meta = json(a.path().join("sample_meta.json"));
    let acc = meta["chains"][0]["acceptance"].as_f64().unwrap();
    assert!((0.2..=0.6).contains(&acc), "{acc}");

    let o = smm(a.path(), &["sample", &cfg("gaussian.json"), "--steps", "0", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    // the failed run wrote nothing and leaves the earlier manifest intact
    assert_eq!(json(a.path().join("manifest-sample.json"))["exit_code"], 0);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_smm"))
        .args(["validate", &cfg("gaussian.json")])
        .env("SMM_OUTDIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("manifest-validate.json").exists());
    assert!(dir.path().join("validate.json").exists());
}
