use serde_json::{json, Value};
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str], config: Option<Value>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_curlspec"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(c) = config {
        let p = dir.join("config.json");
        std::fs::write(&p, serde_json::to_string_pretty(&c).unwrap()).unwrap();
        cmd.arg("--config").arg(p);
    }
    cmd.output().unwrap()
}

fn results(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/results.json")).unwrap()).unwrap()
}

#[test]
fn mesh_info_reports_topology() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["mesh-info"], Some(json!({"domain": {"generator": "torus", "refinement": 1}})));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = results(d.path());
    assert_eq!(r["command"], "mesh-info");
    assert_eq!(r["result"]["boundary_genus"], 1);
}

#[test]
fn unknown_config_field_is_a_configuration_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["solve"], Some(json!({"solver": {"kk": 3}})));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("kk"), "{err}");
    let e: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("out/error.json")).unwrap()).unwrap();
    assert_eq!(e["error"]["kind"], "config");
}

#[test]
fn inconsistent_lagrangian_is_a_configuration_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = json!({
        "domain": {"generator": "torus", "refinement": 1},
        "lagrangian": {"preset": "custom", "f": [[1.0, 0.0], [0.0, 1.0]]}
    });
    let o = run(d.path(), &["solve"], Some(cfg));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn solve_finds_the_ball_triple() {
    let d = tempfile::tempdir().unwrap();
    let cfg = json!({"domain": {"generator": "ball", "refinement": 1}, "solver": {"k": 4, "shift": 4.0}});
    let o = run(d.path(), &["solve"], Some(cfg));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = results(d.path());
    let clusters = r["result"]["eigen"]["clusters"].as_array().unwrap();
    assert!(clusters.iter().any(|c| c["len"] == 3), "{clusters:?}");
    assert!(d.path().join("out/fields.vtk").exists());
}

#[test]
fn torus_solve_reports_one_harmonic_field() {
    let d = tempfile::tempdir().unwrap();
    let cfg = json!({"domain": {"generator": "torus", "refinement": 1}, "solver": {"k": 4, "shift": 24.0},
                     "output": {"vtk": false}});
    let o = run(d.path(), &["solve"], Some(cfg));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = results(d.path());
    assert_eq!(r["result"]["eigen"]["harmonic_dimension"], 1);
    assert!(r["result"]["selfadjointness_defect"].as_f64().unwrap() < 1e-9);
    assert!(!d.path().join("out/fields.vtk").exists());
}

#[test]
fn solver_budget_exhaustion_is_a_numerical_failure() {
    let d = tempfile::tempdir().unwrap();
    let cfg = json!({"domain": {"generator": "ball", "refinement": 1},
                     "solver": {"k": 4, "max_applications": 8, "max_shift_retries": 0}});
    let o = run(d.path(), &["solve"], Some(cfg));
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let e: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("out/error.json")).unwrap()).unwrap();
    assert_eq!(e["error"]["kind"], "numerical");
}

#[test]
fn sequential_split_experiment_is_byte_reproducible() {
    let cfg = json!({"split": {"refinement": 2, "trials": 2, "amplitude": 0.02, "seed": 7}});
    let mut outs = vec![];
    for _ in 0..2 {
        let d = tempfile::tempdir().unwrap();
        let o = run(d.path(), &["split-experiment", "--sequential"], Some(cfg.clone()));
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(std::fs::read(d.path().join("out/results.json")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn dilation_only_optimization_stops_at_once() {
    let d = tempfile::tempdir().unwrap();
    let cfg = json!({
        "domain": {"generator": "ball", "refinement": 1},
        "optimize": {"family": {"kind": "dilation"}, "options": {"certificate": false}}
    });
    let o = run(d.path(), &["optimize"], Some(cfg));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = results(d.path());
    assert_eq!(r["result"]["optimization"]["stop_reason"], "gradient");
    assert_eq!(r["result"]["optimization"]["trajectory"].as_array().unwrap().len(), 1);
    assert!(d.path().join("out/final.tmesh").exists());
}

#[test]
fn track_writes_branch_table() {
    let d = tempfile::tempdir().unwrap();
    let cfg = json!({
        "domain": {"generator": "ball", "refinement": 1},
        "track": {"field": {"kind": "dilation"}, "steps": 2, "t_end": 0.1}
    });
    let o = run(d.path(), &["track"], Some(cfg));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.path().join("out/branches.csv")).unwrap();
    assert!(csv.starts_with("t,branch,eigenvalue,overlap"));
    assert_eq!(csv.lines().count(), 1 + 3 * 3);
}
