use std::path::PathBuf;

use log::{info, warn};

use super::config::{ExperimentConfig, Mode};
use super::record::{
    CircuitRecord, ExperimentRecord, ScaledRun, SizeRecord, StatisticsBlock, RECORD_KIND, SCHEMA_VERSION,
};
use crate::circuit::generate_qv_circuit;
use crate::decompose::decompose_to_cnots;
use crate::error::{QvError, Result};
use crate::heavy::{compute_heavy_set, heavy_fraction, ideal_heavy_probability, HeavySet};
use crate::par;
use crate::rng::{derive_seed, tagged_rng, Stream};
use crate::sim::{ideal_probabilities, noisy_distribution, sample_counts, Counts, NoiseModel};
use crate::stats::{
    analytic_variance_circuit, analytic_variance_total, bootstrap_sigma, group_split_sigma, volume_decision,
    CircuitEstimate, FactorObservation, THRESHOLD,
};
use crate::zne::{extrapolate, fold_circuit, RichardsonCoefficients, ScaleFactorSchedule};

const UNMITIGATED_TAG: u64 = 0;
const MITIGATED_TAG: u64 = 1;
const GROUP_SPLIT_GROUPS: usize = 5;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Partial results are written here after every batch.
    pub checkpoint: Option<PathBuf>,
    /// Previously written (possibly partial) record to continue from.
    pub resume: Option<ExperimentRecord>,
}

pub fn circuit_seed(seed: u64, m: usize, index: usize) -> u64 {
    derive_seed(seed, &[m as u64, index as u64])
}

fn shot_seed(circuit_seed: u64, tag: u64, factor: usize) -> u64 {
    derive_seed(circuit_seed, &[tag, factor as u64])
}

pub(crate) fn bootstrap_seed(seed: u64, m: usize, tag: u64) -> u64 {
    derive_seed(seed, &[0xb007, m as u64, tag])
}

fn scaled_run(lambda: f64, hs: &HeavySet, counts: Counts) -> Result<ScaledRun> {
    Ok(ScaledRun {
        lambda,
        heavy_set_digest: hs.digest(),
        heavy_fraction: heavy_fraction(&counts, hs)?,
        counts,
    })
}

/// Generates, compiles and executes circuit `index` of width `m`.
pub fn simulate_circuit(
    m: usize,
    index: usize,
    config: &ExperimentConfig,
    noise: &NoiseModel,
    schedule: &ScaleFactorSchedule,
    coeffs: &RichardsonCoefficients,
) -> Result<CircuitRecord> {
    let seed = circuit_seed(config.seed, m, index);
    let model = generate_qv_circuit(m, seed)?;
    let probs = ideal_probabilities(&model)?;
    let hs = compute_heavy_set(&probs)?;
    let ideal = ideal_heavy_probability(&probs, &hs)?;
    let (circuit, report) = decompose_to_cnots(&model)?;

    let mut dist_at_one = None;
    let mut mitigated = Vec::new();
    if config.mode.mitigated() {
        for (i, &lambda) in schedule.lambdas.iter().enumerate() {
            let dist = noisy_distribution(&fold_circuit(&circuit, lambda)?, noise)?;
            let mut rng = tagged_rng(shot_seed(seed, MITIGATED_TAG, i), Stream::Shots);
            let counts = sample_counts(&dist, m, schedule.shots_per_factor, &mut rng)?;
            mitigated.push(scaled_run(lambda, &hs, counts)?);
            if lambda == 1.0 {
                dist_at_one = Some(dist);
            }
        }
    }
    let unmitigated = if config.mode.unmitigated() {
        let dist = match dist_at_one {
            Some(d) => d,
            None => noisy_distribution(&circuit, noise)?,
        };
        let mut rng = tagged_rng(shot_seed(seed, UNMITIGATED_TAG, 0), Stream::Shots);
        let counts = sample_counts(&dist, m, config.n_s, &mut rng)?;
        Some(scaled_run(1.0, &hs, counts)?)
    } else {
        None
    };
    let e_c = if mitigated.is_empty() {
        None
    } else {
        let values: Vec<f64> = mitigated.iter().map(|r| r.heavy_fraction).collect();
        Some(extrapolate(&values, coeffs)?)
    };
    Ok(CircuitRecord {
        index,
        seed: Some(seed),
        heavy_set_digest: hs.digest(),
        heavy_set: hs,
        ideal_heavy_probability: Some(ideal),
        cnot_count: Some(report.cnot_count),
        unmitigated,
        mitigated,
        e_c,
    })
}

/// Aggregates the per-circuit results of one width. Shared by simulated runs
/// and ingested counts so both produce identical statistics.
pub(crate) fn aggregate_size(
    m: usize,
    circuits: &[CircuitRecord],
    seed: u64,
    n_resamples: usize,
    group_split: bool,
    coeffs: &RichardsonCoefficients,
) -> Result<(Option<StatisticsBlock>, Option<StatisticsBlock>)> {
    let block = |values: &[f64], variances: &[f64], tag: u64| -> Result<StatisticsBlock> {
        let n_c = values.len();
        let h_d = values.iter().sum::<f64>() / n_c as f64;
        let sigma_bootstrap = bootstrap_sigma(values, n_resamples, bootstrap_seed(seed, m, tag))?;
        let sigma_analytic = analytic_variance_total(variances)?.sqrt();
        let sigma_group_split = if group_split && n_c >= GROUP_SPLIT_GROUPS {
            Some(group_split_sigma(values, GROUP_SPLIT_GROUPS)?)
        } else {
            None
        };
        let decision = volume_decision(h_d, sigma_bootstrap, n_c)?;
        Ok(StatisticsBlock {
            h_d,
            sigma_bootstrap,
            sigma_analytic,
            sigma_group_split,
            n_resamples,
            n_c,
            passed: decision.passed,
            conformant: n_c >= crate::stats::MIN_CONFORMANT_CIRCUITS,
            threshold: THRESHOLD,
        })
    };

    let unmitigated = if !circuits.is_empty() && circuits.iter().all(|c| c.unmitigated.is_some()) {
        let mut values = Vec::with_capacity(circuits.len());
        let mut variances = Vec::with_capacity(circuits.len());
        let unit = RichardsonCoefficients {
            lambdas: vec![1.0],
            etas: vec![1.0],
        };
        for c in circuits {
            let run = c.unmitigated.as_ref().expect("checked above");
            let est = CircuitEstimate {
                e_c: run.heavy_fraction,
                per_factor: vec![FactorObservation {
                    lambda: 1.0,
                    expectation: run.heavy_fraction,
                    shots: run.counts.total_shots,
                }],
            };
            values.push(est.e_c);
            variances.push(analytic_variance_circuit(&est, &unit)?);
        }
        Some(block(&values, &variances, UNMITIGATED_TAG)?)
    } else {
        None
    };

    let mitigated = if !circuits.is_empty() && circuits.iter().all(|c| c.e_c.is_some()) {
        let mut values = Vec::with_capacity(circuits.len());
        let mut variances = Vec::with_capacity(circuits.len());
        for c in circuits {
            let est = CircuitEstimate {
                e_c: c.e_c.expect("checked above"),
                per_factor: c
                    .mitigated
                    .iter()
                    .map(|r| FactorObservation {
                        lambda: r.lambda,
                        expectation: r.heavy_fraction,
                        shots: r.counts.total_shots,
                    })
                    .collect(),
            };
            values.push(est.e_c);
            variances.push(analytic_variance_circuit(&est, coeffs)?);
        }
        Some(block(&values, &variances, MITIGATED_TAG)?)
    } else {
        None
    };
    Ok((unmitigated, mitigated))
}

fn empty_record(
    config: &ExperimentConfig,
    noise: &NoiseModel,
    schedule: &ScaleFactorSchedule,
    coeffs: &RichardsonCoefficients,
) -> ExperimentRecord {
    ExperimentRecord {
        schema_version: SCHEMA_VERSION,
        kind: RECORD_KIND.into(),
        config: config.clone(),
        noise: Some(noise.clone()),
        schedule: schedule.clone(),
        coefficients: coeffs.etas.clone(),
        sizes: Vec::new(),
        volume: None,
        complete: false,
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    run_experiment_with(config, RunOptions::default())
}

/// Runs the full experiment, checkpointing after every batch of circuits and
/// skipping circuits already present in `options.resume`.
pub fn run_experiment_with(config: &ExperimentConfig, options: RunOptions) -> Result<ExperimentRecord> {
    config.validate()?;
    if !config.is_conformant() {
        warn!(
            "n_c = {} is below {}; results are marked non-conformant",
            config.n_c,
            crate::stats::MIN_CONFORMANT_CIRCUITS
        );
    }
    let noise = config.noise.resolve()?;
    let schedule = config.schedule()?;
    let coeffs = schedule.coefficients()?;

    let mut record = match options.resume {
        Some(prev) => {
            if prev.config != *config {
                return Err(QvError::InvalidArgument(
                    "existing record was produced with a different configuration".into(),
                ));
            }
            prev
        }
        None => empty_record(config, &noise, &schedule, &coeffs),
    };
    record.complete = false;
    record.volume = None;

    for &m in &config.m_range {
        let pos = match record.sizes.iter().position(|s| s.num_qubits == m) {
            Some(p) => p,
            None => {
                record.sizes.push(SizeRecord {
                    num_qubits: m,
                    circuits: Vec::new(),
                    unmitigated: None,
                    mitigated: None,
                });
                record.sizes.len() - 1
            }
        };
        let done = record.sizes[pos].circuits.len();
        if done > 0 {
            info!("m = {m}: resuming after {done} circuits");
        }
        let mut start = done;
        while start < config.n_c {
            let end = (start + config.batch_size).min(config.n_c);
            let batch = par::map_range(end - start, |k| {
                simulate_circuit(m, start + k, config, &noise, &schedule, &coeffs)
            });
            for c in batch {
                record.sizes[pos].circuits.push(c?);
            }
            start = end;
            info!("m = {m}: {start}/{} circuits", config.n_c);
            if let Some(path) = &options.checkpoint {
                record.save(path)?;
            }
        }
        let size = &mut record.sizes[pos];
        let (u, mi) = aggregate_size(
            m,
            &size.circuits,
            config.seed,
            config.n_resamples,
            config.group_split,
            &coeffs,
        )?;
        size.unmitigated = u;
        size.mitigated = mi;
    }
    record.sizes.sort_by_key(|s| s.num_qubits);
    record.volume = if is_contiguous_from_two(&config.m_range) {
        Some(record.summarize_volume()?)
    } else {
        None
    };
    record.complete = true;
    if let Some(path) = &options.checkpoint {
        record.save(path)?;
    }
    Ok(record)
}

pub(crate) fn is_contiguous_from_two(ms: &[usize]) -> bool {
    let mut v = ms.to_vec();
    v.sort_unstable();
    v.iter().enumerate().all(|(k, &m)| m == k + 2)
}

impl Mode {
    pub(crate) fn from_flags(unmitigated: bool, mitigated: bool) -> Option<Mode> {
        match (unmitigated, mitigated) {
            (true, true) => Some(Mode::Both),
            (true, false) => Some(Mode::Unmitigated),
            (false, true) => Some(Mode::Mitigated),
            (false, false) => None,
        }
    }
}
