use std::path::Path;
use std::process::{Command, Output};

use qmg1k::cli::{grid_row, GridCell, ScenarioGrid};

const BIN: &str = env!("CARGO_BIN_EXE_qmg1k");

fn qmg1k(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_GRID: &str = r#"{
    "K_list": [3, 15],
    "lambda_list": [0.1, 0.95],
    "dists": [{"type": "exponential", "rate": 1.0}, {"type": "phase_type_coupled"}],
    "shots": 2000,
    "des_events": 20000,
    "trials": 2,
    "T": 40
}"#;

#[test]
fn grid_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.json", SMALL_GRID);
    let out = qmg1k(&["grid", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", r#"{"K_list": "three"}"#);
    assert_eq!(qmg1k(&["grid", "--seed", "1", "--config", &bad]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(qmg1k(&["grid", "--seed", "1", "--config", missing.to_str().unwrap()]).status.code(), Some(3));
    let cfg = write_config(dir.path(), "g.json", SMALL_GRID);
    let unwritable = dir.path().join("no_such_dir").join("out.csv");
    let out = qmg1k(&["grid", "--seed", "1", "--config", &cfg, "--out", unwritable.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_dir"));
    assert_eq!(qmg1k(&["grid", "--engine", "quantum"]).status.code(), Some(2));
    assert_eq!(qmg1k(&["census"]).status.code(), Some(0));
}

#[test]
fn grid_output_is_byte_identical_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.json", SMALL_GRID);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = qmg1k(&["grid", "--seed", "99", "--config", &cfg, "--out", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.as_bytes(), std::fs::read(&b).unwrap().as_slice());
    assert!(!text.contains('\r'));

    // each row recomputes from its K, lambda, law, trial and seed
    let grid: ScenarioGrid = serde_json::from_str(SMALL_GRID).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let mut n = 0;
    for rec in rd.records() {
        let rec = rec.unwrap();
        let lambda: f64 = rec[col("lambda")].parse().unwrap();
        let spec = grid.dists.iter().find(|d| d.label() == &rec[col("dist")]).unwrap();
        let cell = GridCell {
            scenario_id: rec[col("scenario_id")].parse().unwrap(),
            k: rec[col("K")].parse().unwrap(),
            lambda,
            dist_label: spec.label(),
            service: spec.resolve(lambda).unwrap(),
        };
        let trial = rec[col("trial")].parse().unwrap();
        let seed = rec[col("seed")].parse().unwrap();
        let row = grid_row(&cell, trial, seed, &grid.settings, grid.des_events).unwrap();
        assert_eq!(row.fields(), rec.iter().map(str::to_string).collect::<Vec<_>>());
        n += 1;
    }
    assert_eq!(n, 2 * 2 * 2 * 2);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.json", SMALL_GRID);
    let out = qmg1k(&[
        "grid", "--seed", "3", "--config", &cfg, "--shots", "500", "--engine", "traced", "--schedule", "paper",
        "--rejection", "on",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().unwrap().clone();
    let engine = header.iter().position(|h| h == "engine").unwrap();
    let shots = header.iter().position(|h| h == "shots").unwrap();
    let floor = header.iter().position(|h| h == "bound_acceptance_lower").unwrap();
    for rec in rd.records() {
        let rec = rec.unwrap();
        assert_eq!(&rec[engine], "traced");
        assert_eq!(&rec[shots], "500");
        assert!(!rec[floor].is_empty());
    }
}

#[test]
fn every_command_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = write_config(dir.path(), "s.json", r#"{"lambda_list": [0.3, 0.6], "trials": 3, "K": 7, "des_events": 5000}"#);
    let grid = write_config(dir.path(), "g.json", SMALL_GRID);
    let des = write_config(
        dir.path(),
        "d.json",
        r#"{"lambda": 0.5, "service": {"type": "uniform", "lo": 0.5, "hi": 1.5}, "k": 7, "horizon_events": 20000, "seed": 5}"#,
    );
    let runs: Vec<Vec<&str>> = vec![
        vec!["demo", "--seed", "7"],
        vec!["census", "--schedule", "paper"],
        vec!["sensitivity", "--seed", "7", "--config", &sweep],
        vec!["des", "--config", &des],
        vec!["des", "--grid", "--seed", "7", "--config", &grid],
    ];
    for args in runs {
        let a = qmg1k(&args);
        let b = qmg1k(&args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn census_json_fields() {
    let out = qmg1k(&["census"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["R_used", "slice_gates", "cap_gates", "diffusion_gates", "total"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn des_json_and_csv() {
    let out = qmg1k(&["des", "--seed", "1"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let w = v["W_sojourn"].as_f64().unwrap();
    assert!((w - 1.286).abs() / 1.286 < 0.02);

    let dir = tempfile::tempdir().unwrap();
    let grid = write_config(dir.path(), "g.json", SMALL_GRID);
    let out = qmg1k(&["des", "--grid", "--seed", "2", "--config", &grid]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scenario_id,lambda,dist,K,L,W,p_block,tv_vs_analytic,seed");
    assert_eq!(lines.len(), 1 + 8);
    for l in &lines[1..] {
        let tv = l.split(',').nth(7).unwrap();
        assert_eq!(tv.is_empty(), l.contains("phase_type"));
    }
}

#[test]
fn demo_writes_json_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("demo.json");
    let out = qmg1k(&["demo", "--out", path.to_str().unwrap()]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("theta_srv = 1.0683"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((v["theta_arr"].as_f64().unwrap() - 0.5443).abs() < 1e-4);
    assert_eq!(v["post_arrival"].as_array().unwrap().len(), 8);
}
