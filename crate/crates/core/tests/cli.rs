//! End-to-end checks of the `cavities` binary: determinism of artifacts,
//! config handling, and exit codes.

use std::path::PathBuf;
use std::process::Command;

fn cavities() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cavities"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cavities_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn help_exits_zero() {
    let status = cavities().args(["densities", "--help"]).output().unwrap();
    assert!(status.status.success());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = cavities().args(["densities", "--frobnicate", "1"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = temp_dir("badconf");
    let conf = dir.join("bad.conf");
    std::fs::write(&conf, "not_a_key = 1\n").unwrap();
    let out = cavities()
        .args(["--config", conf.to_str().unwrap(), "--out-dir", dir.to_str().unwrap(), "entropy"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not_a_key"), "stderr: {stderr}");
}

#[test]
fn densities_are_byte_identical_across_runs() {
    let dir_a = temp_dir("det_a");
    let dir_b = temp_dir("det_b");
    for dir in [&dir_a, &dir_b] {
        let out = cavities()
            .args([
                "--out-dir",
                dir.to_str().unwrap(),
                "densities",
                "--g",
                "0.25",
                "--delta",
                "0.5",
                "--deltaT",
                "0.1",
                "--tmax",
                "2",
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir_a.join("densities.csv")).unwrap();
    let b = std::fs::read(dir_b.join("densities.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_values_are_overridden_by_flags() {
    let dir = temp_dir("merge");
    let conf = dir.join("run.conf");
    std::fs::write(&conf, "g = 0.1\ntmax = 2\nphi = pi/8\n").unwrap();
    // Override g on the command line; phi and tmax come from the file.
    let out = cavities()
        .args([
            "--config",
            conf.to_str().unwrap(),
            "--out-dir",
            dir.to_str().unwrap(),
            "densities",
            "--g",
            "0.25",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let manifest = std::fs::read_to_string(dir.join("densities_manifest.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(parsed["params"]["g_mag"], 0.25);
    assert_eq!(parsed["evolution"]["t_max"], 2.0);
    let phi = parsed["params"]["phi"].as_f64().unwrap();
    assert!((phi - std::f64::consts::PI / 8.0).abs() < 1e-12);
}

#[test]
fn trajectory_records_are_deterministic_per_seed() {
    let dir_a = temp_dir("traj_a");
    let dir_b = temp_dir("traj_b");
    for dir in [&dir_a, &dir_b] {
        let out = cavities()
            .args([
                "--out-dir",
                dir.to_str().unwrap(),
                "trajectories",
                "--n",
                "24",
                "--seed",
                "7",
                "--tmax",
                "30",
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir_a.join("records.csv")).unwrap();
    let b = std::fs::read(dir_b.join("records.csv")).unwrap();
    assert_eq!(a, b);

    // A different seed must give different click times.
    let dir_c = temp_dir("traj_c");
    let out = cavities()
        .args([
            "--out-dir",
            dir_c.to_str().unwrap(),
            "trajectories",
            "--n",
            "24",
            "--seed",
            "8",
            "--tmax",
            "30",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let c = std::fs::read(dir_c.join("records.csv")).unwrap();
    assert_ne!(a, c);
}
