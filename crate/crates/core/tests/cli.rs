use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_curved-pipe"));
    c.env_remove("CURVED_PIPE_OUTPUT")
        .env_remove("CURVED_PIPE_THREADS");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn validate_passes_by_default() {
    let o = bin().arg("validate").output().unwrap();
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{out}");
    assert!(!out.contains("FAIL"));
}

#[test]
fn tightened_tolerances_fail_with_names() {
    let o = bin()
        .args(["validate", "--tolerance-scale", "1e-9"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(
        out.lines()
            .any(|l| l.starts_with("disk rigidity error") && l.ends_with("FAIL")),
        "{out}"
    );
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, "").unwrap();
    let o = bin()
        .args(["validate", "--config"])
        .arg(&empty)
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert_eq!(code(&bin().arg("solve").output().unwrap()), 1);
    assert_eq!(code(&bin().output().unwrap()), 1);
    let missing = bin()
        .args(["solve", "--config", "/nonexistent.toml"])
        .output()
        .unwrap();
    assert_eq!(code(&missing), 1);

    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "[geometry]\npreset = \"torus\"\nradius = 0.4\n[physics]\nh = 0.5\n",
    )
    .unwrap();
    let o = bin()
        .args(["solve", "--config"])
        .arg(&bad)
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("station 0"), "{err}");
}

#[test]
fn solve_honors_output_override_and_format() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["--threads", "2", "solve", "--format", "vtk", "--config"])
        .arg(configs().join("straight.toml"))
        .env("CURVED_PIPE_OUTPUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["rigidity.csv", "pressure.csv", "fields.vtk", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("fields.csv").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["geometry"]["lambda"], 0.0);
    assert_eq!(report["geometry"]["gamma"], 0.0);
    assert!(report["residuals"]["flux_defect"].as_f64().unwrap() < 1e-10);
    assert_eq!(report["timing"]["threads"], 2);
}

#[test]
fn torus_rigidity_is_half_pi() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["solve", "--config"])
        .arg(configs().join("torus.toml"))
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("rigidity.csv")).unwrap();
    let g: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(g.len(), 17);
    for v in g {
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-3, "{v}");
    }
}

#[test]
fn study_commands_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    std::fs::write(
        &cfg,
        "[geometry]\npreset = \"torus\"\n[discretization]\nn_s = 5\nn_theta = 16\nn_rho = 16\n[physics]\nh = 0.05\n[study]\nmeshes = [8, 16, 32]\nh_values = [0.1, 0.05, 0.025]\n[output]\ndirectory = \"results\"\n",
    )
    .unwrap();
    let o = bin()
        .args(["converge", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let conv = std::fs::read_to_string(dir.path().join("results/convergence.csv")).unwrap();
    assert_eq!(conv.lines().count(), 5);
    let o = bin()
        .args(["compare-perturbation", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let pert = std::fs::read_to_string(dir.path().join("results/perturbation.csv")).unwrap();
    assert_eq!(pert.lines().count(), 4);
    assert!(dir.path().join("results/perturbation_slopes.csv").exists());
}
