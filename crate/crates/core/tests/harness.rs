use std::collections::BTreeMap;

use qvx_core::harness::{
    analyze_external, determine_volume, emit_plot_data, ingest_external_counts, parse_qubit_range, run_experiment,
    run_experiment_with, ExperimentConfig, ExperimentRecord, ExternalCircuit, ExternalCounts, ExternalRun,
    ExternalSize, Mode, NoiseSpec, RunOptions, EXTERNAL_KIND,
};
use qvx_core::stats::NOISELESS_ASYMPTOTE;
use qvx_core::QvError;

fn quick(m_range: Vec<usize>, n_c: usize) -> ExperimentConfig {
    ExperimentConfig {
        m_range,
        n_c,
        n_s: 1000,
        n_resamples: 100,
        batch_size: 5,
        ..Default::default()
    }
}

#[test]
fn replay_is_identical() {
    let cfg = quick(vec![2, 3], 12);
    let a = run_experiment(&cfg).unwrap().to_json().unwrap();
    let b = run_experiment(&cfg).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    let other = ExperimentConfig { seed: 43, ..cfg };
    assert_ne!(a, run_experiment(&other).unwrap().to_json().unwrap());
}

#[test]
fn resume_from_partial_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.json");
    let cfg = quick(vec![2, 3], 12);
    let full = run_experiment_with(
        &cfg,
        RunOptions {
            checkpoint: Some(path.clone()),
            resume: None,
        },
    )
    .unwrap();
    let reference = std::fs::read_to_string(&path).unwrap();
    assert_eq!(reference, full.to_json().unwrap());

    // simulate an interruption in the middle of m = 3
    let mut partial = full.clone();
    partial.sizes[1].circuits.truncate(7);
    partial.sizes[1].unmitigated = None;
    partial.sizes[1].mitigated = None;
    partial.volume = None;
    partial.complete = false;
    partial.save(&path).unwrap();

    let resumed = ExperimentRecord::load(&path).unwrap();
    run_experiment_with(
        &cfg,
        RunOptions {
            checkpoint: Some(path.clone()),
            resume: Some(resumed),
        },
    )
    .unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), reference);
}

#[test]
fn resume_rejects_other_config() {
    let cfg = quick(vec![2], 5);
    let rec = run_experiment(&cfg).unwrap();
    let changed = ExperimentConfig { n_s: 2000, ..cfg };
    assert!(run_experiment_with(
        &changed,
        RunOptions {
            checkpoint: None,
            resume: Some(rec)
        }
    )
    .is_err());
}

#[test]
fn noiseless_run_passes_both_modes() {
    let cfg = ExperimentConfig {
        m_range: vec![3],
        n_c: 100,
        n_s: 1000,
        noise: NoiseSpec::Preset("noiseless".into()),
        n_resamples: 200,
        ..Default::default()
    };
    let rec = run_experiment(&cfg).unwrap();
    let s = rec.size(3).unwrap();
    let (u, mi) = (s.unmitigated.as_ref().unwrap(), s.mitigated.as_ref().unwrap());
    assert!(u.passed && mi.passed && u.conformant);
    let combined = 2.0 * (u.sigma_bootstrap.powi(2) + mi.sigma_bootstrap.powi(2)).sqrt();
    assert!((u.h_d - mi.h_d).abs() <= combined);
}

#[test]
fn heavy_set_digest_shared_across_factors() {
    let rec = run_experiment(&quick(vec![3], 4)).unwrap();
    for c in &rec.sizes[0].circuits {
        assert_eq!(c.mitigated.len(), 5);
        for r in c.mitigated.iter().chain(c.unmitigated.as_ref()) {
            assert_eq!(r.heavy_set_digest, c.heavy_set_digest);
        }
        assert_eq!(c.heavy_set.digest(), c.heavy_set_digest);
    }
}

#[test]
fn volume_contiguity() {
    assert_eq!(determine_volume(&[(2, true), (3, true), (4, false)]).unwrap().volume, 3);
    let r = determine_volume(&[(2, true), (3, true), (4, false), (5, true)]).unwrap();
    assert_eq!((r.volume, r.max_passing), (3, 5));
    assert_eq!(determine_volume(&[(2, false), (3, false)]).unwrap().volume, 0);
    assert!(determine_volume(&[(2, true), (4, true)]).is_err());
    assert!(determine_volume(&[(3, true)]).is_err());
}

#[test]
fn plot_rows_and_constants() {
    let dir = tempfile::tempdir().unwrap();
    let rec = run_experiment(&quick(vec![2, 3, 4, 5], 4)).unwrap();
    let files = emit_plot_data(&rec, dir.path()).unwrap();
    let hd = std::fs::read_to_string(&files.estimates).unwrap();
    assert_eq!(hd.lines().count(), 1 + 8);
    for line in hd.lines().skip(1) {
        let f: Vec<f64> = line.split(',').filter_map(|x| x.parse().ok()).collect();
        let (h, s, lo, hi) = (f[1], f[2], f[3], f[4]);
        assert!((lo - (h - 2.0 * s)).abs() < 1e-15 && (hi - (h + 2.0 * s)).abs() < 1e-15);
    }
    let constants = std::fs::read_to_string(&files.constants).unwrap();
    let values: BTreeMap<&str, f64> = constants
        .lines()
        .skip(1)
        .filter_map(|l| l.split_once(','))
        .map(|(k, v)| (k, v.parse().unwrap()))
        .collect();
    assert!((values["threshold"] - 0.666_666_67).abs() < 1e-8);
    assert!((values["asymptote"] - 0.846_573_59).abs() < 1e-8);
    assert_eq!(values["asymptote"], NOISELESS_ASYMPTOTE);
    let conv = std::fs::read_to_string(&files.convergence).unwrap();
    assert_eq!(conv.lines().count(), 1 + 8 * 20);
}

fn write_json<T: serde::Serialize>(dir: &std::path::Path, name: &str, value: &T) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p
}

#[test]
fn ingest_roundtrip_matches_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let rec = run_experiment(&quick(vec![2, 3], 10)).unwrap();
    let ext = ExternalCounts::from_record(&rec);
    let path = write_json(dir.path(), "counts.json", &ext);
    let back = ingest_external_counts(&path).unwrap();
    for (a, b) in rec.sizes.iter().zip(&back.sizes) {
        assert_eq!(a.unmitigated, b.unmitigated);
        assert_eq!(a.mitigated, b.mitigated);
    }
    let again = ExperimentRecord::from_json(&back.to_json().unwrap()).unwrap();
    assert_eq!(again.to_json().unwrap(), back.to_json().unwrap());
}

fn external(scale_factors: Vec<f64>, runs: Vec<(f64, u64)>) -> ExternalCounts {
    let probs = vec![0.4, 0.3, 0.2, 0.1];
    ExternalCounts {
        schema_version: 1,
        kind: EXTERNAL_KIND.into(),
        label: "device".into(),
        scale_factors,
        n_s: 100,
        seed: 0,
        n_resamples: 50,
        group_split: false,
        sizes: vec![ExternalSize {
            num_qubits: 2,
            circuits: vec![ExternalCircuit {
                seed: None,
                ideal_probabilities: Some(probs),
                unmitigated: None,
                runs: runs
                    .into_iter()
                    .map(|(lambda, n)| ExternalRun {
                        lambda,
                        counts: BTreeMap::from([("00".into(), n / 2), ("11".into(), n - n / 2)]),
                    })
                    .collect(),
            }],
        }],
    }
}

#[test]
fn ingest_single_factor_is_unmitigated_only() {
    let rec = analyze_external(&external(vec![1.0], vec![(1.0, 100)]), None).unwrap();
    let s = &rec.sizes[0];
    assert!(s.mitigated.is_none());
    let u = s.unmitigated.as_ref().unwrap();
    assert!((u.h_d - 0.5).abs() < 1e-15);
    assert_eq!(rec.config.mode, Mode::Unmitigated);
}

#[test]
fn ingest_without_unit_factor_is_rejected() {
    let err = analyze_external(&external(vec![3.0, 5.0], vec![(3.0, 50), (5.0, 50)]), None).unwrap_err();
    assert!(matches!(err, QvError::ScheduleMismatch(_)), "{err}");
    let err = analyze_external(&external(vec![1.0, 3.0], vec![(1.0, 50)]), None).unwrap_err();
    assert!(err.to_string().contains("sizes[0].circuits[0]"), "{err}");
    let err = analyze_external(&external(vec![1.0, 3.0], vec![(1.0, 50), (3.0, 49)]), None).unwrap_err();
    assert!(err.is_validation(), "{err}");
}

#[test]
fn config_and_range_parsing() {
    let bad: Result<ExperimentConfig, _> = serde_json::from_str(r#"{"m_range":[2],"n_cc":3}"#);
    assert!(bad.is_err());
    assert_eq!(parse_qubit_range("2..5").unwrap(), vec![2, 3, 4, 5]);
    assert_eq!(parse_qubit_range("3,5").unwrap(), vec![3, 5]);
    assert!(parse_qubit_range("5..2").is_err());
}
