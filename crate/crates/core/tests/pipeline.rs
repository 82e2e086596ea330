//! End-to-end behaviour of config parsing, runs and artifact files.

use std::fs;
use std::io::BufReader;

use num_complex::Complex64;
use proptest::prelude::*;
use svv_core::config::{self, InitialCondition};
use svv_core::diagnostics::{self, DiagnosticsRecord, TimeModulus};
use svv_core::experiments::{self, Preset, PresetResult};
use svv_core::fourier::{self, SpectralState};

fn small_config(dir: &std::path::Path) -> config::ExperimentConfig {
    let text = format!(
        "N = 16\nlambda = 1.1\nT = 0.05\nsnapshots = [0.0, 0.025, 0.05]\noutput_dir = {:?}\n",
        dir.display().to_string()
    );
    config::parse_config(&text).unwrap()
}

#[test]
fn exported_solution_reingests_as_initial_data() {
    let dir = tempfile::tempdir().unwrap();
    let state = fourier::square_wave_coefficients(32).unwrap().scaled(0.7);
    let path = dir.path().join("u0.csv");
    experiments::export_solution(&state, 128, &path).unwrap();

    let back = InitialCondition::File { path: path.clone() }
        .state(32)
        .unwrap();
    let err = back.difference(&state).unwrap().coeff_norm();
    assert!(err < 1e-12, "round trip error {err:e}");

    let text = format!(
        "N = 32\nT = 0.1\ninitial = {{ kind = \"file\", path = {:?} }}\n",
        path.display().to_string()
    );
    let cfg = config::parse_config(&text).unwrap();
    let prepared = experiments::prepare(&cfg).unwrap();
    assert!(prepared.initial.difference(&state).unwrap().coeff_norm() < 1e-12);
}

#[test]
fn identical_configs_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = experiments::run_config(&small_config(a.path())).unwrap();
    experiments::run_config(&small_config(b.path())).unwrap();
    for name in &first.manifest.outcome.files {
        if name == "manifest.json" {
            continue;
        }
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
    // manifests differ only in the embedded output directory
    let strip = |p: &std::path::Path| {
        fs::read_to_string(p.join("manifest.json"))
            .unwrap()
            .replace(&p.display().to_string(), "")
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn artifacts_are_complete_and_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = experiments::run_config(&small_config(dir.path())).unwrap();
    for name in [
        "solution.csv",
        "snapshot_00.csv",
        "snapshot_02.csv",
        "diagnostics.jsonl",
        "symbol.csv",
        "manifest.json",
    ] {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }

    let file = fs::File::open(dir.path().join("diagnostics.jsonl")).unwrap();
    let record = DiagnosticsRecord::read_jsonl(BufReader::new(file)).unwrap();
    assert_eq!(record.rows, outcome.trajectory.record.rows);

    let samples =
        config::parse_samples(&fs::read_to_string(dir.path().join("solution.csv")).unwrap())
            .unwrap();
    let state = fourier::project_sampled(&samples, 16).unwrap();
    let err = state
        .difference(&outcome.trajectory.final_state)
        .unwrap()
        .coeff_norm();
    assert!(err < 1e-12, "{err:e}");

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["n_modes"], 16);
    assert_eq!(manifest["derived"]["m_n"], outcome.manifest.derived.m_n);
}

#[test]
fn svv_solution_is_monotone_across_the_jump() {
    let dir = tempfile::tempdir().unwrap();
    let PresetResult::Runs(runs) = experiments::run_preset(
        Preset::parse("fig1", Some(0.6), None).unwrap(),
        Some(64),
        dir.path(),
    )
    .unwrap() else {
        panic!("fig1 returns plain runs")
    };
    let u = fourier::evaluate_physical(&runs[0].trajectory.final_state, 512).unwrap();
    // The initial jump sits at x = π; the smoothed front moves right with speed ~0 (symmetric data).
    let window = &u[256 - 24..256 + 24];
    let rises = window.windows(2).filter(|w| w[1] > w[0] + 1e-3).count();
    assert_eq!(rises, 0, "non-monotone front: {window:?}");
    assert!(window[0] > 0.5 && window[window.len() - 1] < -0.5);
}

#[test]
fn solution_is_lipschitz_in_time_for_a_smooth_run() {
    let text = "N = 32\nlambda = 1.6\nT = 0.2\ninitial = { kind = \"cosine\", amplitude = 0.3 }\n\
                snapshots = [0.0, 0.025, 0.05, 0.075, 0.1, 0.125, 0.15, 0.175, 0.2]\n";
    let outcome = experiments::run(&config::parse_config(text).unwrap()).unwrap();
    assert_eq!(outcome.trajectory.snapshots.len(), 9);
    match diagnostics::time_modulus(&outcome.trajectory.snapshots, 128).unwrap() {
        TimeModulus::Exponent { value, .. } => assert!(value > 0.9, "exponent {value}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_configs_name_the_field() {
    for (text, field) in [
        ("N = 1\nT = 1.0\n", "N"),
        ("N = 16\nT = 1.0\ntheta = 1.5\n", "theta"),
        ("N = 16\nT = 1.0\ndt = 0.1\ncfl = 0.5\n", "dt"),
        ("N = 16\nT = 1.0\nlambda = 2.5\n", "lambda"),
    ] {
        let err = config::parse_config(text).unwrap_err().to_string();
        assert!(err.contains(field), "{text:?}: {err}");
    }
}

fn state_strategy(n: usize) -> impl Strategy<Value = SpectralState> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n + 1).prop_map(move |c| {
        SpectralState::from_fn(n, |xi| {
            let (re, im) = c[xi as usize];
            Complex64::new(re, if xi == 0 { 0.0 } else { im })
        })
        .unwrap()
    })
}

proptest! {
    #[test]
    fn evaluate_then_project_is_identity(state in state_strategy(12), extra in 0usize..40) {
        let m = 2 * 12 + 1 + extra;
        let back = fourier::project_sampled(&fourier::evaluate_physical(&state, m).unwrap(), 12).unwrap();
        prop_assert!(back.difference(&state).unwrap().coeff_norm() < 1e-12);
    }

    #[test]
    fn csv_round_trip_preserves_coefficients(state in state_strategy(8)) {
        let mut buf = Vec::new();
        experiments::write_solution(&state, 40, &mut buf).unwrap();
        let samples = config::parse_samples(std::str::from_utf8(&buf).unwrap()).unwrap();
        let back = fourier::project_sampled(&samples, 8).unwrap();
        prop_assert!(back.difference(&state).unwrap().coeff_norm() < 1e-13);
    }
}
