//! Black-box tests of the command-line interface and its exit-code
//! contract: 0 pass, 1 check failure, 2 configuration error, 3
//! non-convergence.

use std::path::Path;
use std::process::{Command, Output};

fn edl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const OPTIMAL_P2: &str = r#"
[domain]
obstacle_radius = 1.0
enclosing_radius = 2.0
truncation_radius = 32.0
n_radial = 64
n_angular = 96
radial_spacing = "log"

[family]
name = "remark_optimal"
p = 2.0

[boundary]
inner_value = 1.0
outer = "matched"
decay_exponent = 1.0

[verification]
identity_t = 0.2
identity_rho = 8.0
coarea_t = 0.4
"#;

#[test]
fn solve_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), OPTIMAL_P2);
    let out_dir = dir.path().join("run");
    let out = edl(&["solve", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    assert!(out_dir.join("solution.csv").exists());
    assert!(out_dir.join("convergence.json").exists());
    assert!(out_dir.join("manifest.json").exists());

    let out = edl(&["decay", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("weak L^(2,inf)"), "{stdout}");
    assert!(stdout.contains("fitted exponent"), "{stdout}");

    let out = edl(&["report", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("lorentz_weak_norm"), "{stdout}");
    assert!(out_dir.join("report.json").exists());
}

#[test]
fn verify_passes_on_optimal_family() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), OPTIMAL_P2);
    let out_dir = dir.path().join("run");
    let out = edl(&["verify", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    assert!(out_dir.join("verify.json").exists());
    assert!(out_dir.join("curves.csv").exists());
}

#[test]
fn invalid_geometry_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = OPTIMAL_P2.replace("truncation_radius = 32.0", "truncation_radius = 1.5");
    let cfg = write_config(dir.path(), &bad);
    let out = edl(&["solve", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("truncation_radius"), "{stderr}");
}

#[test]
fn failing_assumption_exits_1_and_force_continues() {
    let dir = tempfile::tempdir().unwrap();
    let bad = OPTIMAL_P2
        .replace("remark_optimal", "violator_negative_c")
        .replace("outer = \"matched\"", "outer = \"zero\"")
        .replace("decay_exponent = 1.0", "");
    let cfg = write_config(dir.path(), &bad);
    let out_dir = dir.path().join("run");
    let out = edl(&["verify", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("C3"), "{stderr}");
    // the assumption report is still on disk
    assert!(out_dir.join("verify.json").exists());
}

#[test]
fn report_on_empty_directory_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = edl(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("verify.json"), "{stderr}");
}

#[test]
fn grid_scale_refines_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), OPTIMAL_P2);
    let d1 = dir.path().join("g1");
    let d2 = dir.path().join("g2");
    let out = edl(&["solve", "--config", &cfg, "--out", d1.to_str().unwrap()]);
    assert!(out.status.success());
    let out = edl(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        d2.to_str().unwrap(),
        "--grid-scale",
        "2",
    ]);
    assert!(out.status.success());
    let n1 = std::fs::read_to_string(d1.join("solution.csv")).unwrap().lines().count();
    let n2 = std::fs::read_to_string(d2.join("solution.csv")).unwrap().lines().count();
    assert_eq!(n2 - 1, 4 * (n1 - 1));
}
