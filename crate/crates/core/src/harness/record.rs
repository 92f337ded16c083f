use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{QvError, Result};
use crate::heavy::HeavySet;
use crate::sim::{Counts, NoiseModel};
use crate::stats;
use crate::zne::ScaleFactorSchedule;

pub const SCHEMA_VERSION: u32 = 1;
pub const RECORD_KIND: &str = "qvx.results";

/// Counts for one circuit at one scale factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledRun {
    pub lambda: f64,
    pub heavy_set_digest: String,
    pub heavy_fraction: f64,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub index: usize,
    /// Seed from which the model circuit is regenerated.
    pub seed: Option<u64>,
    pub heavy_set: HeavySet,
    pub heavy_set_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal_heavy_probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cnot_count: Option<usize>,
    /// All `n_s` shots at `λ = 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unmitigated: Option<ScaledRun>,
    /// `⌊n_s / k⌋` shots at each scale factor.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mitigated: Vec<ScaledRun>,
    /// Extrapolated heavy-output probability (unclamped).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_c: Option<f64>,
}

impl CircuitRecord {
    pub fn mitigated_shots(&self) -> u64 {
        self.mitigated.iter().map(|r| r.counts.total_shots).sum()
    }

    pub fn unmitigated_shots(&self) -> u64 {
        self.unmitigated.as_ref().map_or(0, |r| r.counts.total_shots)
    }
}

/// Aggregate statistics for one width and mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticsBlock {
    pub h_d: f64,
    pub sigma_bootstrap: f64,
    pub sigma_analytic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_group_split: Option<f64>,
    pub n_resamples: usize,
    pub n_c: usize,
    pub passed: bool,
    /// False when fewer than 100 circuits were used.
    pub conformant: bool,
    pub threshold: f64,
}

impl StatisticsBlock {
    pub fn volume_estimate(&self) -> stats::VolumeEstimate {
        stats::VolumeEstimate {
            h_d: self.h_d,
            sigma: self.sigma_bootstrap,
            n_c: self.n_c,
            passed: self.passed,
        }
    }

    /// `h_d` limited to `[0, 1]` for display.
    pub fn h_d_clamped(&self) -> f64 {
        self.h_d.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRecord {
    pub num_qubits: usize,
    pub circuits: Vec<CircuitRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unmitigated: Option<StatisticsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mitigated: Option<StatisticsBlock>,
}

/// Achieved volume for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeResult {
    /// Largest `m` with every width from 2 to `m` passing; 0 if none.
    pub volume: usize,
    /// Largest passing `m` regardless of gaps.
    pub max_passing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unmitigated: Option<VolumeResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mitigated: Option<VolumeResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub kind: String,
    pub config: ExperimentConfig,
    /// Resolved noise model; absent for ingested hardware data.
    pub noise: Option<NoiseModel>,
    pub schedule: ScaleFactorSchedule,
    pub coefficients: Vec<f64>,
    pub sizes: Vec<SizeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<VolumeSummary>,
    pub complete: bool,
}

impl ExperimentRecord {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: ExperimentRecord = serde_json::from_str(text)?;
        if rec.kind != RECORD_KIND {
            return Err(QvError::schema(
                "kind",
                format!("expected {RECORD_KIND:?}, got {:?}", rec.kind),
            ));
        }
        if rec.schema_version != SCHEMA_VERSION {
            return Err(QvError::schema(
                "schema_version",
                format!("unsupported version {}", rec.schema_version),
            ));
        }
        Ok(rec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Writes via a temporary file and rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.partial");
        std::fs::write(&tmp, self.to_json()?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn size(&self, m: usize) -> Option<&SizeRecord> {
        self.sizes.iter().find(|s| s.num_qubits == m)
    }

    /// Recomputes the volume summary from the per-width statistics.
    pub fn summarize_volume(&self) -> Result<VolumeSummary> {
        let pick = |f: fn(&SizeRecord) -> Option<&StatisticsBlock>| -> Result<Option<VolumeResult>> {
            let rows: Option<Vec<(usize, bool)>> = self
                .sizes
                .iter()
                .map(|s| f(s).map(|b| (s.num_qubits, b.passed)))
                .collect();
            match rows {
                Some(rows) if !rows.is_empty() => determine_volume(&rows).map(Some),
                _ => Ok(None),
            }
        };
        Ok(VolumeSummary {
            unmitigated: pick(|s| s.unmitigated.as_ref())?,
            mitigated: pick(|s| s.mitigated.as_ref())?,
        })
    }
}

/// Largest `m` such that every width from 2 through `m` passes.
///
/// `results` must cover a contiguous range of widths starting at 2.
pub fn determine_volume(results: &[(usize, bool)]) -> Result<VolumeResult> {
    let mut sorted = results.to_vec();
    sorted.sort_by_key(|&(m, _)| m);
    for (k, &(m, _)) in sorted.iter().enumerate() {
        if m != k + 2 {
            return Err(QvError::InvalidArgument(format!(
                "widths must be contiguous from 2; found {m} at position {k}"
            )));
        }
    }
    let volume = sorted
        .iter()
        .take_while(|&&(_, passed)| passed)
        .last()
        .map_or(0, |&(m, _)| m);
    let max_passing = sorted
        .iter()
        .filter(|&&(_, passed)| passed)
        .map(|&(m, _)| m)
        .max()
        .unwrap_or(0);
    Ok(VolumeResult { volume, max_passing })
}
