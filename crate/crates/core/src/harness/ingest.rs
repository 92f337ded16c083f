//! Analysis of externally measured counts (e.g. hardware runs).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode, NoiseSpec};
use super::record::{CircuitRecord, ExperimentRecord, ScaledRun, SizeRecord, RECORD_KIND, SCHEMA_VERSION};
use super::run::{aggregate_size, is_contiguous_from_two};
use crate::circuit::generate_qv_circuit;
use crate::error::{QvError, Result};
use crate::heavy::{compute_heavy_set, heavy_fraction, ideal_heavy_probability};
use crate::sim::{ideal_probabilities, Counts, NoiseModel};
use crate::stats::DEFAULT_RESAMPLES;
use crate::zne::{extrapolate, richardson_coefficients, ScaleFactorSchedule};

pub const EXTERNAL_KIND: &str = "qvx.external_counts";

fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalRun {
    pub lambda: f64,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCircuit {
    /// Regenerates the model circuit; used when no probabilities are given.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub ideal_probabilities: Option<Vec<f64>>,
    /// Full-budget counts at `λ = 1`.
    #[serde(default)]
    pub unmitigated: Option<BTreeMap<String, u64>>,
    /// One entry per scale factor of the schedule.
    #[serde(default)]
    pub runs: Vec<ExternalRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSize {
    pub num_qubits: usize,
    pub circuits: Vec<ExternalCircuit>,
}

/// Input document for `ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCounts {
    pub schema_version: u32,
    pub kind: String,
    #[serde(default)]
    pub label: String,
    pub scale_factors: Vec<f64>,
    pub n_s: u64,
    /// Seed for the bootstrap streams.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_resamples")]
    pub n_resamples: usize,
    #[serde(default)]
    pub group_split: bool,
    pub sizes: Vec<ExternalSize>,
}

impl ExternalCounts {
    /// Extracts the raw counts of a results record.
    pub fn from_record(rec: &ExperimentRecord) -> Self {
        let k1 = rec.schedule.lambdas == [1.0];
        let sizes = rec
            .sizes
            .iter()
            .map(|s| ExternalSize {
                num_qubits: s.num_qubits,
                circuits: s
                    .circuits
                    .iter()
                    .map(|c| {
                        let unmitigated = c.unmitigated.as_ref().map(|r| r.counts.counts.clone());
                        let mut runs: Vec<ExternalRun> = c
                            .mitigated
                            .iter()
                            .map(|r| ExternalRun {
                                lambda: r.lambda,
                                counts: r.counts.counts.clone(),
                            })
                            .collect();
                        let unmitigated = if k1 && runs.is_empty() {
                            runs = unmitigated
                                .into_iter()
                                .map(|counts| ExternalRun { lambda: 1.0, counts })
                                .collect();
                            None
                        } else {
                            unmitigated
                        };
                        ExternalCircuit {
                            seed: c.seed,
                            ideal_probabilities: None,
                            unmitigated,
                            runs,
                        }
                    })
                    .collect(),
            })
            .collect();
        ExternalCounts {
            schema_version: SCHEMA_VERSION,
            kind: EXTERNAL_KIND.into(),
            label: rec.noise.as_ref().map(|n| n.label.clone()).unwrap_or_default(),
            scale_factors: rec.schedule.lambdas.clone(),
            n_s: rec.config.n_s,
            seed: rec.config.seed,
            n_resamples: rec.config.n_resamples,
            group_split: rec.config.group_split,
            sizes,
        }
    }
}

fn to_counts(map: &BTreeMap<String, u64>, m: usize, path: &str) -> Result<Counts> {
    let mut c = Counts::empty(m);
    for (s, &n) in map {
        c.add(s.clone(), n);
    }
    c.validate().map_err(|e| QvError::schema(path, e.to_string()))?;
    Ok(c)
}

fn check_total(counts: &Counts, expected: u64, path: &str) -> Result<()> {
    if counts.total_shots != expected {
        return Err(QvError::ScheduleMismatch(format!(
            "{path}: {} shots, schedule requires {expected}",
            counts.total_shots
        )));
    }
    Ok(())
}

/// Runs the heavy-output, extrapolation and statistics pipeline on external
/// counts. `base` carries the original configuration when re-analyzing a
/// results record.
pub fn analyze_external(
    ext: &ExternalCounts,
    base: Option<(&ExperimentConfig, Option<&NoiseModel>)>,
) -> Result<ExperimentRecord> {
    if ext.kind != EXTERNAL_KIND {
        return Err(QvError::schema(
            "kind",
            format!("expected {EXTERNAL_KIND:?}, got {:?}", ext.kind),
        ));
    }
    if ext.schema_version != SCHEMA_VERSION {
        return Err(QvError::schema(
            "schema_version",
            format!("unsupported version {}", ext.schema_version),
        ));
    }
    if ext.sizes.is_empty() {
        return Err(QvError::schema("sizes", "empty"));
    }
    if ext.n_resamples == 0 {
        return Err(QvError::schema("n_resamples", "must be positive"));
    }
    if !ext.scale_factors.contains(&1.0) {
        return Err(QvError::ScheduleMismatch("scale_factors must include 1".into()));
    }
    let schedule = ScaleFactorSchedule::new(ext.scale_factors.clone(), ext.n_s)
        .map_err(|e| QvError::schema("scale_factors", e.to_string()))?;
    let coeffs = richardson_coefficients(&schedule.lambdas)?;
    let k = schedule.len();
    let unmitigated_only = k == 1;

    let mut sizes = Vec::with_capacity(ext.sizes.len());
    let mut any_unmitigated = false;
    let mut any_mitigated = false;
    for (si, size) in ext.sizes.iter().enumerate() {
        let m = size.num_qubits;
        if m < 2 {
            return Err(QvError::schema(format!("sizes[{si}].num_qubits"), format!("{m} < 2")));
        }
        if size.circuits.is_empty() {
            return Err(QvError::schema(format!("sizes[{si}].circuits"), "empty"));
        }
        let mut circuits = Vec::with_capacity(size.circuits.len());
        for (ci, c) in size.circuits.iter().enumerate() {
            let path = format!("sizes[{si}].circuits[{ci}]");
            let probs = match (&c.ideal_probabilities, c.seed) {
                (Some(p), _) => {
                    if p.len() != 1 << m {
                        return Err(QvError::schema(
                            format!("{path}.ideal_probabilities"),
                            format!("expected {} entries, got {}", 1usize << m, p.len()),
                        ));
                    }
                    p.clone()
                }
                (None, Some(seed)) => ideal_probabilities(&generate_qv_circuit(m, seed)?)?,
                (None, None) => {
                    return Err(QvError::schema(path, "needs either seed or ideal_probabilities"));
                }
            };
            let hs = compute_heavy_set(&probs)
                .map_err(|e| QvError::schema(format!("{path}.ideal_probabilities"), e.to_string()))?;
            let ideal = ideal_heavy_probability(&probs, &hs)?;

            let mut by_lambda = Vec::with_capacity(k);
            for &lambda in &schedule.lambdas {
                let found: Vec<usize> = c
                    .runs
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.lambda == lambda)
                    .map(|(i, _)| i)
                    .collect();
                match found.as_slice() {
                    [i] => by_lambda.push(*i),
                    [] => {
                        return Err(QvError::ScheduleMismatch(format!(
                            "{path}.runs: no counts for lambda = {lambda}"
                        )))
                    }
                    _ => {
                        return Err(QvError::ScheduleMismatch(format!(
                            "{path}.runs: lambda = {lambda} appears more than once"
                        )))
                    }
                }
            }
            if c.runs.len() != k {
                return Err(QvError::ScheduleMismatch(format!(
                    "{path}.runs: {} entries for a schedule of {k} scale factors",
                    c.runs.len()
                )));
            }

            let digest = hs.digest();
            let scored = |map: &BTreeMap<String, u64>, lambda: f64, p: &str| -> Result<ScaledRun> {
                let counts = to_counts(map, m, p)?;
                Ok(ScaledRun {
                    lambda,
                    heavy_set_digest: digest.clone(),
                    heavy_fraction: heavy_fraction(&counts, &hs)?,
                    counts,
                })
            };

            let (unmitigated, mitigated, e_c) = if unmitigated_only {
                if c.unmitigated.is_some() {
                    return Err(QvError::schema(
                        format!("{path}.unmitigated"),
                        "with a single scale factor the lambda = 1 run is the unmitigated data",
                    ));
                }
                let p = format!("{path}.runs[{}].counts", by_lambda[0]);
                let run = scored(&c.runs[by_lambda[0]].counts, 1.0, &p)?;
                check_total(&run.counts, ext.n_s, &p)?;
                (Some(run), Vec::new(), None)
            } else {
                let mut mitigated = Vec::with_capacity(k);
                for (&i, &lambda) in by_lambda.iter().zip(&schedule.lambdas) {
                    let p = format!("{path}.runs[{i}].counts");
                    let run = scored(&c.runs[i].counts, lambda, &p)?;
                    check_total(&run.counts, schedule.shots_per_factor, &p)?;
                    mitigated.push(run);
                }
                let values: Vec<f64> = mitigated.iter().map(|r| r.heavy_fraction).collect();
                let e_c = extrapolate(&values, &coeffs)?;
                let unmitigated = match &c.unmitigated {
                    Some(map) => {
                        let p = format!("{path}.unmitigated");
                        let run = scored(map, 1.0, &p)?;
                        check_total(&run.counts, ext.n_s, &p)?;
                        Some(run)
                    }
                    None => None,
                };
                (unmitigated, mitigated, Some(e_c))
            };
            circuits.push(CircuitRecord {
                index: ci,
                seed: c.seed,
                heavy_set: hs,
                heavy_set_digest: digest,
                ideal_heavy_probability: Some(ideal),
                cnot_count: None,
                unmitigated,
                mitigated,
                e_c,
            });
        }
        let (u, mi) = aggregate_size(m, &circuits, ext.seed, ext.n_resamples, ext.group_split, &coeffs)?;
        any_unmitigated |= u.is_some();
        any_mitigated |= mi.is_some();
        sizes.push(SizeRecord {
            num_qubits: m,
            circuits,
            unmitigated: u,
            mitigated: mi,
        });
    }
    sizes.sort_by_key(|s| s.num_qubits);

    let m_range: Vec<usize> = sizes.iter().map(|s| s.num_qubits).collect();
    let (config, noise) = match base {
        Some((cfg, noise)) => (cfg.clone(), noise.cloned()),
        None => {
            let mode = Mode::from_flags(any_unmitigated, any_mitigated).unwrap_or(Mode::Both);
            let cfg = ExperimentConfig {
                m_range: m_range.clone(),
                n_c: sizes.iter().map(|s| s.circuits.len()).min().unwrap_or(0),
                n_s: ext.n_s,
                scale_factors: ext.scale_factors.clone(),
                noise: NoiseSpec::Preset(if ext.label.is_empty() {
                    "external".into()
                } else {
                    ext.label.clone()
                }),
                seed: ext.seed,
                mode,
                n_resamples: ext.n_resamples,
                group_split: ext.group_split,
                ..ExperimentConfig::default()
            };
            (cfg, None)
        }
    };
    let mut record = ExperimentRecord {
        schema_version: SCHEMA_VERSION,
        kind: RECORD_KIND.into(),
        config,
        noise,
        schedule,
        coefficients: coeffs.etas.clone(),
        sizes,
        volume: None,
        complete: true,
    };
    if is_contiguous_from_two(&m_range) {
        record.volume = Some(record.summarize_volume()?);
    }
    Ok(record)
}

/// Reads either an external-counts document or a results record.
pub fn load_external_counts(path: &Path) -> Result<(ExternalCounts, Option<ExperimentRecord>)> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("kind").and_then(|k| k.as_str()) {
        Some(RECORD_KIND) => {
            let rec = ExperimentRecord::from_json(&text)?;
            Ok((ExternalCounts::from_record(&rec), Some(rec)))
        }
        Some(EXTERNAL_KIND) => Ok((serde_json::from_value(value)?, None)),
        Some(other) => Err(QvError::schema("kind", format!("unknown document kind {other:?}"))),
        None => Err(QvError::schema("kind", "missing")),
    }
}

pub fn ingest_external_counts(path: &Path) -> Result<ExperimentRecord> {
    let (ext, rec) = load_external_counts(path)?;
    analyze_external(&ext, rec.as_ref().map(|r| (&r.config, r.noise.as_ref())))
}
