use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn elabc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elabc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn unknown_example_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", r#"{"example": "poisson"}"#);
    let out = elabc(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("poisson"));
}

#[test]
fn unknown_key_and_bad_values_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("typo.json", r#"{"example": "normal", "iteratons": 10}"#),
        ("zero.json", r#"{"example": "normal", "m": 0}"#),
        ("summary.json", r#"{"example": "gk", "summaries": "median"}"#),
        ("stereo.json", r#"{"example": "stereo", "n": 50}"#),
        ("syntax.json", r#"{"example": "#),
    ] {
        let cfg = write_config(tmp.path(), name, body);
        let out = elabc(&["run", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let missing = tmp.path().join("missing.json");
    assert_eq!(elabc(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let cfg = write_config(tmp.path(), "sizes.json", r#"{"n_list": [400, 100]}"#);
    assert_eq!(elabc(&["concentration", "--config", &cfg]).status.code(), Some(2));
    let cfg = write_config(tmp.path(), "level.json", r#"{"level": 1.5}"#);
    assert_eq!(elabc(&["coverage", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn run_writes_outputs_and_density_reads_them() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "run.json",
        &format!(
            r#"{{"example": "normal", "iterations": 500, "burnin": 500, "output_dir": {:?}}}"#,
            dir.to_string_lossy()
        ),
    );
    let out = elabc(&["run", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["posterior"][0]["name"], "mu");
    for file in ["chain.csv", "summary.json", "manifest.json"] {
        assert!(dir.join(file).exists(), "{file}");
    }
    let manifest: Value =
        serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);

    let chain = dir.join("chain.csv");
    let density = dir.join("density.csv");
    let out = elabc(&[
        "density",
        "--chain",
        chain.to_str().unwrap(),
        "--grid",
        "64",
        "--output",
        density.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(density).unwrap();
    assert_eq!(text.lines().next(), Some("coordinate,x,density"));
    assert_eq!(text.lines().count(), 65);

    // stdout when no output file is given
    let out = elabc(&["density", "--chain", chain.to_str().unwrap(), "--grid", "8"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 9);
}

#[test]
fn config_keys_override_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.json",
        r#"{"example": "normal", "iterations": 200, "burnin": 200, "seed": 5}"#,
    );
    let out = elabc(&["run", "--config", &cfg, "--seed", "9", "--iterations", "300"]);
    assert!(out.status.success());
    let summary = stdout_json(&out);
    assert_eq!(summary["seed"], 5);
    assert_eq!(summary["iterations"], 200);

    // flags apply when the config is silent
    let cfg = write_config(tmp.path(), "bare.json", r#"{"example": "normal", "burnin": 100}"#);
    let out = elabc(&["run", "--config", &cfg, "--seed", "9", "--iterations", "300"]);
    let summary = stdout_json(&out);
    assert_eq!(summary["seed"], 9);
    assert_eq!(summary["iterations"], 300);
}

#[test]
fn abc_run_output_feeds_density() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("abc");
    let cfg = write_config(
        tmp.path(),
        "abc.json",
        &format!(
            r#"{{"example": "normal", "method": "rejection-abc", "abc_total": 5000,
                "abc_keep": 100, "output_dir": {:?}}}"#,
            dir.to_string_lossy()
        ),
    );
    let out = elabc(&["run", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["abc"]["kept"], 100);
    let chain = dir.join("chain.csv");
    let out = elabc(&["density", "--chain", chain.to_str().unwrap(), "--grid", "16"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(text.lines().skip(1).all(|l| l.starts_with("mu,")));
}

#[test]
fn density_config_file_and_degenerate_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let chain = tmp.path().join("flat.csv");
    std::fs::write(&chain, "mu,log_kernel,accepted\n1.0,-1,1\n1.0,-1,0\n1.0,-1,0\n").unwrap();
    let cfg = write_config(
        tmp.path(),
        "density.json",
        &format!(r#"{{"chain": {:?}, "grid": 16}}"#, chain.to_string_lossy()),
    );
    let out = elabc(&["density", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn small_studies_succeed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "coverage.json",
        r#"{"replicates": 2, "iterations": 200, "burnin": 200, "constraint_sets": ["mean", "median"]}"#,
    );
    let out = elabc(&["coverage", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["rows"].as_array().unwrap().len(), 2);

    let cfg = write_config(
        tmp.path(),
        "conc.json",
        r#"{"n_list": [50, 100], "iterations": 200, "burnin": 200}"#,
    );
    let out = elabc(&["concentration", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["rows"].as_array().unwrap().len(), 2);
}
