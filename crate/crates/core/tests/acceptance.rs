//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any criterion fails.

use std::fmt::Write as _;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qvx_core::circuit::{circuit_unitary, generate_qv_circuit, haar_su4};
use qvx_core::decompose::{decompose_block, decompose_to_cnots};
use qvx_core::harness::{
    circuit_seed, ingest_external_counts, run_experiment, ExperimentConfig, ExperimentRecord, Mode, NoiseSpec,
};
use qvx_core::heavy::{compute_heavy_set, heavy_fraction, ideal_heavy_probability};
use qvx_core::linalg::phase_aligned_distance_dense;
use qvx_core::rng::{derive_seed, tagged_rng, Stream};
use qvx_core::sim::{ideal_probabilities, noisy_distribution, sample_counts, NoiseModel};
use qvx_core::stats::{
    analytic_variance_circuit, analytic_variance_total, bootstrap_sigma_sweep, CircuitEstimate, FactorObservation,
    NOISELESS_ASYMPTOTE,
};
use qvx_core::zne::{extrapolate, fold_circuit, richardson_coefficients, DEFAULT_SCALE_FACTORS};

const SEED: u64 = 42;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn quito_record() -> &'static ExperimentRecord {
    static RECORD: OnceLock<ExperimentRecord> = OnceLock::new();
    RECORD.get_or_init(|| {
        run_experiment(&ExperimentConfig {
            m_range: vec![2, 3, 4, 5],
            n_c: 100,
            n_s: 10_000,
            noise: NoiseSpec::Preset("quito".into()),
            seed: SEED,
            mode: Mode::Both,
            ..Default::default()
        })
        .expect("quito run")
    })
}

fn artifact_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).expect("artifact dir");
    dir
}

fn noiseless_asymptote() -> Outcome {
    let n = 500;
    let total: f64 = (0..n)
        .map(|i| {
            let probs = ideal_probabilities(&generate_qv_circuit(5, circuit_seed(SEED, 5, i)).unwrap()).unwrap();
            ideal_heavy_probability(&probs, &compute_heavy_set(&probs).unwrap()).unwrap()
        })
        .sum();
    let mean = total / n as f64;
    let gap = (mean - NOISELESS_ASYMPTOTE).abs();
    check(
        gap <= 0.01,
        format!("mean {mean:.5} over {n} circuits, |gap| {gap:.5} (limit 0.01)"),
    )
}

fn richardson_exactness() -> Outcome {
    let expected = [2.4609375, -3.28125, 2.953125, -1.40625, 0.2734375];
    let c = richardson_coefficients(&DEFAULT_SCALE_FACTORS).unwrap();
    let coeff_err = c
        .etas
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let sum_err = (c.etas.iter().sum::<f64>() - 1.0).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut poly_err: f64 = 0.0;
    for _ in 0..100 {
        let degree = rng.random_range(0..=4);
        let coeffs: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect();
        let values: Vec<f64> = DEFAULT_SCALE_FACTORS
            .iter()
            .map(|&l| coeffs.iter().rev().fold(0.0, |acc, a| acc * l + a))
            .collect();
        poly_err = poly_err.max((extrapolate(&values, &c).unwrap() - coeffs[0]).abs());
    }
    check(
        coeff_err <= 1e-12 && sum_err <= 1e-12 && poly_err <= 1e-9,
        format!("coefficient err {coeff_err:.1e}, sum err {sum_err:.1e}, polynomial err {poly_err:.1e}"),
    )
}

fn fold_unitarity() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let m = 2 + (i % 3) as usize;
        let (c, _) = decompose_to_cnots(&generate_qv_circuit(m, derive_seed(SEED, &[3, i])).unwrap()).unwrap();
        let reference = circuit_unitary(&c).unwrap();
        for lambda in [3.0, 5.0, 7.0, 9.0] {
            let folded = circuit_unitary(&fold_circuit(&c, lambda).unwrap()).unwrap();
            worst = worst.max(phase_aligned_distance_dense(&folded, &reference));
        }
    }
    check(
        worst <= 1e-9,
        format!("max deviation {worst:.2e} over 50 circuits x 4 factors"),
    )
}

fn kak_soundness() -> Outcome {
    let mut rng = tagged_rng(derive_seed(SEED, &[4]), Stream::Circuit);
    let mut worst: f64 = 0.0;
    let mut cnots_ok = true;
    for _ in 0..200 {
        let block = haar_su4(&mut rng);
        let (gates, deviation) = decompose_block(&block, 0, 1).unwrap();
        let c = qvx_core::circuit::Circuit::from_gates(2, gates).unwrap();
        cnots_ok &= c.cnot_count() == 3;
        let rebuilt = circuit_unitary(&c).unwrap();
        let dense = nalgebra::DMatrix::from_fn(4, 4, |r, col| {
            // circuit_unitary indexes qubit 0 as the low bit; the block puts it high
            let swap = |x: usize| ((x & 1) << 1) | (x >> 1);
            block[(swap(r), swap(col))]
        });
        worst = worst.max(deviation).max(phase_aligned_distance_dense(&rebuilt, &dense));
    }
    check(
        cnots_ok && worst <= 1e-8,
        format!("200 blocks, 3 CNOTs each: {cnots_ok}, max deviation {worst:.2e}"),
    )
}

fn mitigation_lifts() -> Outcome {
    let rec = quito_record();
    let mut ok = true;
    let mut parts = Vec::new();
    for s in &rec.sizes {
        let (u, m) = (s.unmitigated.as_ref().unwrap(), s.mitigated.as_ref().unwrap());
        let gap = m.h_d - u.h_d;
        let sigma = (u.sigma_bootstrap.powi(2) + m.sigma_bootstrap.powi(2)).sqrt();
        ok &= gap > sigma;
        parts.push(format!("m={} gap {gap:.4} vs {sigma:.4}", s.num_qubits));
    }
    check(ok, parts.join("; "))
}

fn threshold_crossing() -> Outcome {
    let base = NoiseModel::preset("quito").unwrap();
    let mut csv = String::from(
        "eps_cnot,m,h_d_unmitigated,sigma_unmitigated,passed_unmitigated,h_d_mitigated,sigma_mitigated,passed_mitigated\n",
    );
    let mut crossings = Vec::new();
    for step in 0..=6 {
        let eps = 0.005 + 0.0025 * step as f64;
        let noise = NoiseModel::new(base.eps_1q, eps, base.eps_readout)
            .unwrap()
            .with_label(format!("quito-cx{eps}"));
        let rec = run_experiment(&ExperimentConfig {
            m_range: vec![2, 3, 4, 5, 6],
            n_c: 100,
            n_s: 10_000,
            noise: NoiseSpec::Model(noise),
            seed: SEED,
            mode: Mode::Both,
            ..Default::default()
        })
        .unwrap();
        for s in &rec.sizes {
            let (u, m) = (s.unmitigated.as_ref().unwrap(), s.mitigated.as_ref().unwrap());
            writeln!(
                csv,
                "{eps},{},{},{},{},{},{},{}",
                s.num_qubits, u.h_d, u.sigma_bootstrap, u.passed, m.h_d, m.sigma_bootstrap, m.passed
            )
            .unwrap();
            if !u.passed && m.passed {
                crossings.push(format!("eps_cnot={eps} m={}", s.num_qubits));
            }
        }
    }
    let path = artifact_dir().join("threshold_sweep.csv");
    std::fs::write(&path, csv).unwrap();
    check(
        !crossings.is_empty(),
        format!(
            "{} crossing(s) [{}], sweep at {}",
            crossings.len(),
            crossings.join(", "),
            path.display()
        ),
    )
}

fn variance_law() -> Outcome {
    let noise = NoiseModel::preset("quito").unwrap();
    let coeffs = richardson_coefficients(&DEFAULT_SCALE_FACTORS).unwrap();
    let shots = 2000;
    let m = 3;
    let prepared: Vec<_> = (0..20)
        .map(|i| {
            let model = generate_qv_circuit(m, circuit_seed(SEED, m, i)).unwrap();
            let hs = compute_heavy_set(&ideal_probabilities(&model).unwrap()).unwrap();
            let (c, _) = decompose_to_cnots(&model).unwrap();
            let dists: Vec<Vec<f64>> = DEFAULT_SCALE_FACTORS
                .iter()
                .map(|&l| noisy_distribution(&fold_circuit(&c, l).unwrap(), &noise).unwrap())
                .collect();
            (hs, dists)
        })
        .collect();

    let repeats = 200;
    let mut estimates = Vec::with_capacity(repeats);
    let mut analytic = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let mut rng = tagged_rng(derive_seed(SEED, &[7, r as u64]), Stream::Shots);
        let mut values = Vec::new();
        let mut variances = Vec::new();
        for (hs, dists) in &prepared {
            let per: Vec<FactorObservation> = DEFAULT_SCALE_FACTORS
                .iter()
                .zip(dists)
                .map(|(&lambda, d)| {
                    let counts = sample_counts(d, m, shots, &mut rng).unwrap();
                    FactorObservation {
                        lambda,
                        expectation: heavy_fraction(&counts, hs).unwrap(),
                        shots,
                    }
                })
                .collect();
            let values_at: Vec<f64> = per.iter().map(|o| o.expectation).collect();
            let est = CircuitEstimate {
                e_c: extrapolate(&values_at, &coeffs).unwrap(),
                per_factor: per,
            };
            variances.push(analytic_variance_circuit(&est, &coeffs).unwrap());
            values.push(est.e_c);
        }
        estimates.push(values.iter().sum::<f64>() / values.len() as f64);
        analytic.push(analytic_variance_total(&variances).unwrap().sqrt());
    }
    let mu = estimates.iter().sum::<f64>() / repeats as f64;
    let empirical = (estimates.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (repeats - 1) as f64).sqrt();
    let predicted = analytic.iter().sum::<f64>() / repeats as f64;
    let rel = (predicted / empirical - 1.0).abs();

    let unit = richardson_coefficients(&[1.0]).unwrap();
    let binomial_ok = [(0.3, 10_000u64), (0.75, 2000), (0.5, 1)].iter().all(|&(p, n)| {
        let est = CircuitEstimate {
            e_c: p,
            per_factor: vec![FactorObservation {
                lambda: 1.0,
                expectation: p,
                shots: n,
            }],
        };
        (analytic_variance_circuit(&est, &unit).unwrap() - p * (1.0 - p) / n as f64).abs() < 1e-15
    });
    check(
        rel < 0.2 && binomial_ok,
        format!("analytic {predicted:.5} vs empirical {empirical:.5} (rel {rel:.3}), k=1 binomial: {binomial_ok}"),
    )
}

fn bootstrap_convergence() -> Outcome {
    let rec = quito_record();
    let mut worst: f64 = 0.0;
    for s in &rec.sizes {
        let values: Vec<f64> = s.circuits.iter().map(|c| c.e_c.unwrap()).collect();
        let counts: Vec<usize> = (1..=20).map(|k| 50 * k).collect();
        let sweep = bootstrap_sigma_sweep(&values, &counts, derive_seed(SEED, &[8, s.num_qubits as u64])).unwrap();
        let tail: Vec<f64> = sweep.iter().filter(|(n, _)| *n > 400).map(|(_, v)| *v).collect();
        let (lo, hi) = tail
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        worst = worst.max((hi - lo) / hi);
    }
    check(worst < 0.1, format!("max relative spread beyond N=400: {worst:.4}"))
}

fn budget_audit() -> Outcome {
    let rec = quito_record();
    let mut audited = 0;
    let mut ok = rec.schedule.shots_per_factor == 2000;
    for s in &rec.sizes {
        for c in &s.circuits {
            ok &= c.mitigated_shots() == 10_000 && c.unmitigated_shots() == 10_000;
            ok &= c.mitigated.iter().all(|r| r.counts.total_shots == 2000);
            audited += 1;
        }
    }
    check(ok, format!("{audited} circuits at 5 x 2000 = 10000 shots"))
}

fn round_trip() -> Outcome {
    let rec = run_experiment(&ExperimentConfig {
        m_range: vec![2, 3, 4],
        n_c: 100,
        n_s: 10_000,
        seed: SEED,
        ..Default::default()
    })
    .unwrap();
    let path = artifact_dir().join("roundtrip_results.json");
    rec.save(&path).unwrap();
    let ingested = ingest_external_counts(&path).unwrap();
    let same_stats = rec
        .sizes
        .iter()
        .zip(&ingested.sizes)
        .all(|(a, b)| a.unmitigated == b.unmitigated && a.mitigated == b.mitigated)
        && rec.volume == ingested.volume;
    let text = ingested.to_json().unwrap();
    let stable = ExperimentRecord::from_json(&text).unwrap().to_json().unwrap() == text;
    let reload_stable = ExperimentRecord::load(&path).unwrap().to_json().unwrap() == rec.to_json().unwrap();
    check(
        same_stats && stable && reload_stable,
        format!(
            "statistics identical: {same_stats}, re-serialization stable: {}",
            stable && reload_stable
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("noiseless asymptote", noiseless_asymptote),
        ("richardson exactness", richardson_exactness),
        ("fold unitarity", fold_unitarity),
        ("kak soundness", kak_soundness),
        ("mitigation lifts h_d", mitigation_lifts),
        ("threshold crossing", threshold_crossing),
        ("variance law", variance_law),
        ("bootstrap convergence", bootstrap_convergence),
        ("budget fairness", budget_audit),
        ("round trip", round_trip),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[{:>2}] PASS {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failures += 1;
                println!("[{:>2}] FAIL {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
