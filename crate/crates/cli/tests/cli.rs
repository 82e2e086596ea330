use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn svv(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svv"))
        .args(args)
        .env("SVV_OUTPUT_ROOT", root)
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn svv")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn run_writes_artifacts_under_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "N = 16\nlambda = 0.6\nT = 0.05\noutput_dir = \"small\"\n",
    );
    let out = svv(&["run", &cfg], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "solution.csv",
        "diagnostics.jsonl",
        "symbol.csv",
        "manifest.json",
    ] {
        assert!(
            dir.path().join("small").join(name).is_file(),
            "missing {name}"
        );
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("N=16"));
}

#[test]
fn out_flag_overrides_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "N = 8\nT = 0.01\noutput_dir = \"ignored\"\n");
    let target = dir.path().join("abs");
    let out = svv(
        &["run", &cfg, "--out", target.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(target.join("manifest.json").is_file());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "N = 16\nT = 0.1\ntheta = 3.0\n");
    let out = svv(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));

    let cfg = write_config(dir.path(), "N = [oops\n");
    assert_eq!(svv(&["run", &cfg], dir.path()).status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = svv(
        &["run", dir.path().join("absent.toml").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_preset_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = svv(&["preset", "fig9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn preset_with_small_n_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = svv(
        &["preset", "fig1", "--lambda", "1.6", "--n", "16"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir
        .path()
        .join("fig1")
        .join("lambda_1.6")
        .join("manifest.json")
        .is_file());
}

#[test]
fn divergent_run_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // Large steps without viscosity or a measure: the explicit scheme diverges.
    let cfg = write_config(
        dir.path(),
        "N = 32\nT = 50.0\nviscosity = \"none\"\ndt = 0.5\noutput_dir = \"div\"\n",
    );
    let out = svv(&["run", &cfg], dir.path());
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn initial_data_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("u0.csv"), "x,u\n0,1\n1,2\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "N = 4\nT = 0.01\ninitial = { kind = \"file\", path = \"u0.csv\" }\n",
    );
    let out = svv(&["run", &cfg], dir.path());
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let cfg = write_config(
        dir.path(),
        "N = 4\nT = 0.01\ninitial = { kind = \"file\", path = \"gone.csv\" }\n",
    );
    assert_eq!(svv(&["run", &cfg], dir.path()).status.code(), Some(1));
}
