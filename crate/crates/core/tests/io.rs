use std::path::PathBuf;

use cnls_core::io::{cache_dir, parse_config, run, write_outputs, RunSpec, CACHE_ENV};
use cnls_core::Error;

fn shipped() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn shipped_configs_parse_and_echo_is_a_fixed_point() {
    let configs = shipped();
    assert!(configs.len() >= 5);
    for (name, text) in configs {
        let spec = parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let echo = spec.to_json();
        let again = parse_config(&echo).unwrap();
        assert_eq!(again, spec, "{name}");
        assert_eq!(again.to_json(), echo, "{name}");
    }
}

#[test]
fn config_errors_are_classified() {
    let cases = [
        "{",
        r#"{"command": "solve"}"#,
        r#"{"grid": {"dim": 1, "half_width": 5, "points": 65}}"#,
        r#"{"command": "ground-state", "grid": {"dim": 1, "half_width": 5, "points": 65}, "kappa1": 1, "kappa2": 1}"#,
        r#"{"command": "ground-state", "grid": {"dim": 1, "half_width": 5, "points": 3}, "kappa1": 1, "kappa2": 1, "b": 1}"#,
        r#"{"command": "ground-state", "grid": {"dim": 1, "half_width": 5, "points": 65}, "kappa1": -1, "kappa2": 1, "b": 1}"#,
        r#"{"command": "ground-state", "grid": {"dim": 1, "half_width": 5, "points": 65}, "kappa1": 1, "kappa2": 1, "b": 1, "seeds": []}"#,
        r#"{"command": "threshold-sweep", "grid": {"dim": 1, "half_width": 5, "points": 65}, "kappa1": 1, "kappa2": 1, "b_values": []}"#,
        r#"{"command": "validate", "extra": 1}"#,
    ];
    for text in cases {
        let err = parse_config(text).expect_err(text);
        assert!(err.is_config_error(), "{text}: {err}");
    }
}

#[test]
fn ground_state_run_writes_its_outputs() {
    let spec = parse_config(
        r#"{"command": "ground-state", "grid": {"dim": 1, "half_width": 15, "points": 513},
            "kappa1": 1, "kappa2": 1, "b": 3}"#,
    )
    .unwrap();
    let report = run(&spec).unwrap();
    assert!(report.success);
    assert_eq!(report.payload["ground_state"]["classification"], "vector");
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(&report, dir.path()).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for expected in ["report.json", "ground_states.csv", "u.bin", "v.bin", "ground_state.json"] {
        assert!(names.iter().any(|n| n == expected), "{expected} missing from {names:?}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["command"], "ground-state");
    assert!(json["spec"]["seeds"].is_array(), "defaults are echoed");
    let csv = std::fs::read_to_string(dir.path().join("ground_states.csv")).unwrap();
    assert!(csv.starts_with("seed_id,status,classification,energy"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn unreachable_tolerance_is_a_solver_failure() {
    let spec = parse_config(
        r#"{"command": "ground-state", "grid": {"dim": 1, "half_width": 15, "points": 257},
            "kappa1": 1, "kappa2": 1, "b": 3, "seeds": [{"kind": "symmetric_vector"}],
            "solver": {"newton_rel_tol": 1e-30}}"#,
    )
    .unwrap();
    let err = run(&spec).unwrap_err();
    assert!(!err.is_config_error(), "{err}");
    assert!(matches!(err.root(), Error::NoConvergence(_)), "{err}");
}

fn sigma_spec(cache_dir: &std::path::Path) -> RunSpec {
    let text = format!(
        r#"{{"command": "sigma-map", "grid": {{"dim": 1, "half_width": 15, "points": 257}},
            "v": {{"type": "constant", "value": 1}}, "w": {{"type": "constant", "value": 1.5}},
            "b": 0, "region": {{"lower": [-1], "upper": [1]}}, "resolution": 3,
            "omega_sq": [0.5, 1], "cache_dir": {:?}}}"#,
        cache_dir.display().to_string()
    );
    parse_config(&text).unwrap()
}

// One test owns the environment variable, so nothing races on it.
#[test]
fn cache_location_prefers_the_environment() {
    let configured = PathBuf::from("configured");
    std::env::remove_var(CACHE_ENV);
    assert_eq!(cache_dir(Some(&configured)), configured);
    assert_eq!(cache_dir(None), PathBuf::from(".cnls-cache"));

    let (from_spec, from_env) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let report = run(&sigma_spec(from_spec.path())).unwrap();
    let file = format!("{}.json", report.fingerprints.cache.clone().unwrap());
    assert!(from_spec.path().join(&file).exists());
    assert_eq!(report.table("sigma_map.csv").unwrap().rows.len(), 3);

    std::env::set_var(CACHE_ENV, from_env.path());
    assert_eq!(cache_dir(Some(&configured)), from_env.path());
    let again = run(&sigma_spec(from_spec.path()));
    std::env::remove_var(CACHE_ENV);
    again.unwrap();
    assert!(from_env.path().join(&file).exists());
}
