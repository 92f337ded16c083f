use std::path::Path;
use std::process::{Command, Output};

fn qvx(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qvx"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn qvx")
}

const SMALL: &[&str] = &["--m", "2..3", "--n-c", "6", "--n-s", "500", "--resamples", "50"];

fn run_small(dir: &Path, out: &str) -> Output {
    let mut args = vec!["run", "--out", out];
    args.extend_from_slice(SMALL);
    qvx(&args, dir)
}

#[test]
fn run_writes_record_and_timing_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(dir.path(), "results.json");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("results.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["schema_version"], 1);
    assert_eq!(value["config"]["m_range"], serde_json::json!([2, 3]));
    let timing: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("results.json.timing.json")).unwrap()).unwrap();
    assert!(timing["elapsed_seconds"].as_f64().unwrap() >= 0.0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("volume (mitigated)"));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_small(dir.path(), "a.json").status.success());
    assert!(run_small(dir.path(), "b.json").status.success());
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    // resuming a complete record changes nothing
    assert!(run_small(dir.path(), "a.json").status.success());
    assert_eq!(a, std::fs::read(dir.path().join("a.json")).unwrap());
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"m_range": [2], "n_c": 4, "n_s": 100, "n_resamples": 20, "noise": {"eps_1q": 0.001, "eps_cnot": 0.01, "eps_readout": 0.02, "label": "custom"}}"#,
    )
    .unwrap();
    let out = qvx(
        &["run", "--config", "cfg.json", "--seed", "7", "--mode", "unmitigated"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["config"]["seed"], 7);
    assert_eq!(value["noise"]["label"], "custom");
    assert!(value["sizes"][0]["mitigated"].is_null());
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--m", "1..3"][..],
        &["run", "--noise", "nairobi"],
        &["run", "--scale-factors", "1,2,3"],
        &["run", "--scale-factors", "3,5"],
        &["run", "--n-s", "3"],
    ] {
        let out = qvx(args, dir.path());
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    std::fs::write(dir.path().join("bad.json"), r#"{"kind": "something"}"#).unwrap();
    assert_eq!(qvx(&["ingest", "bad.json"], dir.path()).status.code(), Some(2));
    assert_eq!(qvx(&["volume", "missing.json"], dir.path()).status.code(), Some(1));
}

#[test]
fn ingest_plot_and_volume() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_small(dir.path(), "results.json").status.success());
    let out = qvx(&["ingest", "results.json", "--out", "ingested.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("results.json")).unwrap()).unwrap();
    let b: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("ingested.json")).unwrap()).unwrap();
    for m in 0..2 {
        assert_eq!(a["sizes"][m]["mitigated"], b["sizes"][m]["mitigated"]);
        assert_eq!(a["sizes"][m]["unmitigated"], b["sizes"][m]["unmitigated"]);
    }

    let out = qvx(&["plot", "results.json", "--out-dir", "plots"], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("plots/constants.csv").exists());
    assert!(dir.path().join("plots/quito_hd.csv").exists());

    let out = qvx(&["volume", "results.json", "--json"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["mitigated"]["volume"].as_u64().is_some());
}
