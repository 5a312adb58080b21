use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use photolab_core::geom::{generate_mesh, MeshSpec};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_photolab");

fn run(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.current_dir(dir).args(args).env_remove("RUST_LOG");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const SMALL: &str = "mesh.family = icosphere\nmesh.subdivisions = 2\nrun.epsilon = 0.2\nrun.volume = 4\nseeds.count = 4\n";

#[test]
fn profile_writes_table_and_record() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["profile", "--out", "o"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("o/profile_eps0p05.csv")).unwrap();
    assert!(csv.starts_with("# "));
    assert!(csv.contains("# run.epsilon = 0.05"));
    let jsonl = fs::read_to_string(tmp.path().join("o/profile.jsonl")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(rec["kind"], "profile");
    assert_eq!(rec["config"]["run.epsilon"], "0.05");
    assert!(!tmp.path().join("o/FAILED").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "s.cfg", SMALL);
    for out in ["a", "b"] {
        let o = run(tmp.path(), &["flow", "--config", "s.cfg", "--out", out, "--threads", "1"], &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(tmp.path().join("a/flow.jsonl")).unwrap();
    let b = fs::read(tmp.path().join("b/flow.jsonl")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bad_config_line_is_reported_with_position() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bad.cfg", "run.epsilon = 0.05\nrun.bogus = 1\n");
    let out = run(tmp.path(), &["profile", "--config", "bad.cfg", "--out", "o"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.cfg:2"), "{err}");
    assert!(err.contains("run.bogus"), "{err}");
}

#[test]
fn malformed_value_is_rejected() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bad.cfg", "run.epsilon = zero\n");
    let out = run(tmp.path(), &["profile", "--config", "bad.cfg", "--out", "o"], &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.cfg:1"));
}

#[test]
fn unknown_subcommand_fails() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["nosuch"], &[]);
    assert!(!out.status.success());
}

#[test]
fn inadmissible_volume_leaves_failure_marker() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "v.cfg", "mesh.subdivisions = 2\nrun.epsilon = 0.05\nrun.volume = 100\n");
    let out = run(tmp.path(), &["photograph", "--config", "v.cfg", "--out", "o"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(tmp.path().join("o/FAILED").exists());
    let ok = run(tmp.path(), &["profile", "--out", "o"], &[]);
    assert!(ok.status.success());
    assert!(!tmp.path().join("o/FAILED").exists());
}

#[test]
fn environment_overrides_defaults() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["profile", "--out", "o"], &[("PHOTOLAB_RUN__EPSILON", "0.1")]);
    assert!(out.status.success());
    assert!(tmp.path().join("o/profile_eps0p1.csv").exists());
    let jsonl = fs::read_to_string(tmp.path().join("o/profile.jsonl")).unwrap();
    assert!(jsonl.contains("\"run.epsilon\":\"0.1\""));
}

#[test]
fn unknown_environment_key_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["profile", "--out", "o"], &[("PHOTOLAB_RUN__NOPE", "1")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_collects_records_into_csv() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "s.cfg", SMALL);
    assert!(run(tmp.path(), &["photograph", "--config", "s.cfg", "--out", "o"], &[]).status.success());
    assert!(run(tmp.path(), &["profile", "--out", "o"], &[]).status.success());
    let out = run(tmp.path(), &["report", "--out", "o"], &[]);
    assert!(out.status.success());
    for kind in ["photograph", "profile"] {
        let text = fs::read_to_string(tmp.path().join(format!("o/report_{kind}.csv"))).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert!(rows.len() >= 2, "{kind}: {text}");
        assert!(rows[0].contains("epsilon"));
    }
}

#[test]
fn gamma_energy_approaches_perimeter_energy() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "g.cfg", "mesh.subdivisions = 4\nrun.epsilon = 0.2, 0.1, 0.05\nrun.volume = pi/2\n");
    let out = run(tmp.path(), &["gamma", "--config", "g.cfg", "--out", "o"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("o/gamma.jsonl")).unwrap();
    let over: Vec<f64> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["summary"]["overshoot"].as_f64().unwrap())
        .collect();
    assert_eq!(over.len(), 3);
    assert!(over.windows(2).all(|w| w[1].abs() < w[0].abs()), "{over:?}");
}

fn summary(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).unwrap();
    serde_json::from_str::<serde_json::Value>(text.lines().next().unwrap()).unwrap()["summary"].clone()
}

#[test]
fn imported_mesh_matches_generated_one() {
    let tmp = TempDir::new().unwrap();
    let m = generate_mesh(&MeshSpec::Icosphere { subdivisions: 3 }).unwrap();
    let mut off = format!("OFF\n{} {} 0\n", m.positions().len(), m.triangles().len());
    for p in m.positions() {
        off += &format!("{:?} {:?} {:?}\n", p[0], p[1], p[2]);
    }
    for t in m.triangles() {
        off += &format!("3 {} {} {}\n", t[0], t[1], t[2]);
    }
    write(tmp.path(), "ico.off", &off);
    write(tmp.path(), "t.cfg", "mesh.subdivisions = 3\nrun.epsilon = 0.2\nrun.volume = 4\nseeds.count = 3\n");
    let gen = run(tmp.path(), &["photograph", "--config", "t.cfg", "--out", "g"], &[]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let imp = run(tmp.path(), &["photograph", "--config", "t.cfg", "--mesh", "ico.off", "--out", "i"], &[]);
    assert!(imp.status.success(), "{}", String::from_utf8_lossy(&imp.stderr));
    let a = summary(&tmp.path().join("g/photograph.jsonl"));
    let b = summary(&tmp.path().join("i/photograph.jsonl"));
    assert_eq!(b["mesh"].as_str().map(|s| s.contains("ico.off")), Some(true), "{b}");
    for key in ["max_energy", "threshold"] {
        let (x, y) = (a[key].as_f64().unwrap(), b[key].as_f64().unwrap());
        assert!((x - y).abs() <= 1e-12 * x.abs(), "{key}: {x} vs {y}");
    }
}

#[test]
fn missing_mesh_file_fails() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["flow", "--mesh", "nope.off", "--out", "o"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.off"));
}

#[test]
fn keys_lists_every_section() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["keys"], &[]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for key in ["mesh.family", "run.epsilon", "flow.max_steps", "eigen.seed", "potential.kind"] {
        assert!(text.contains(key), "{key}");
    }
}

#[test]
fn sweep_records_do_not_depend_on_thread_count() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "s.cfg", SMALL);
    for (out, threads) in [("a", "1"), ("b", "2")] {
        let o = run(tmp.path(), &["sweep", "--config", "s.cfg", "--out", out, "--threads", threads], &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(tmp.path().join("a/sweep.jsonl")).unwrap();
    let b = fs::read(tmp.path().join("b/sweep.jsonl")).unwrap();
    assert_eq!(a, b);
}
