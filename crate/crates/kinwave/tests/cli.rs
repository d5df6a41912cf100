use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn kinwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(path: &Path, value: &Value) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn solitary_config(amplitude: f64) -> Value {
    let r = 2f64.sqrt();
    let h = 0.5 / r;
    json!({
        "schema": 1,
        "kind": "solitary",
        "params": {"e_plus": 1, "e_minus": 1, "q_plus": 1, "q_minus": 1, "alpha": 0},
        "amplitude": amplitude,
        "plus": {"kind": "piecewise", "pieces": [[-2.0 * r, -r, h], [r, 2.0 * r, h]]},
        "minus": {"kind": "piecewise", "pieces": [[-1.9 * r, -r, h], [-0.1 * r, 0.1 * r, h], [r, 1.9 * r, h]]}
    })
}

#[test]
fn example_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = kinwave(&["example", "s2.5", "--out", dir.path().to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "profile.csv",
        "phase_plus.csv",
        "phase_minus.csv",
        "report.json",
    ] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert!(report["verification"]["poisson"].as_f64().unwrap() < 1e-6);
}

#[test]
fn check_reports_failed_clause() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("half.json");
    write_config(&cfg, &solitary_config(0.198));
    let out = kinwave(&["check", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<&str> = report["failed"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(failed.contains(&"G-beta2"), "{failed:?}");

    write_config(&cfg, &solitary_config(0.396362046689092));
    assert_eq!(
        kinwave(&["check", cfg.to_str().unwrap()]).status.code(),
        Some(0)
    );
}

#[test]
fn boltzmann_family_members() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.json");
    write_config(
        &cfg,
        &json!({
            "schema": 1,
            "kind": "train",
            "params": {"e_plus": 1, "e_minus": 1, "q_plus": 1, "q_minus": 1, "boltzmann": {"rho": 1, "kappa": 1}},
            "amplitude": 0.1,
            "plus": {"kind": "piecewise", "pieces": [[0, 0.4472135954999579, 1.0]]},
            "minus": {"kind": "maxwellian", "mass": 1, "center": 0, "kappa": 1}
        }),
    );
    let out_dir = dir.path().join("fam");
    let out = kinwave(&[
        "family",
        cfg.to_str().unwrap(),
        "--kind",
        "boltzmann-match",
        "--gamma",
        "0.5gamma*",
        "--count",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let members: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("members.json")).unwrap())
            .unwrap();
    assert_eq!(members.as_array().unwrap().len(), 3);
    for i in 0..3 {
        assert!(out_dir.join(format!("member_{i}.json")).is_file());
    }
}

#[test]
fn usage_and_input_errors() {
    assert_eq!(kinwave(&["solve"]).status.code(), Some(3));
    assert_eq!(
        kinwave(&["check", "/nonexistent/config.json"])
            .status
            .code(),
        Some(3)
    );
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        kinwave(&["example", "nope", "--out", dir.path().to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}
