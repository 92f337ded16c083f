use serde::{Deserialize, Serialize};

use crate::error::{QvError, Result};
use crate::sim::NoiseModel;
use crate::stats::{DEFAULT_RESAMPLES, MIN_CONFORMANT_CIRCUITS};
use crate::zne::{ScaleFactorSchedule, DEFAULT_SCALE_FACTORS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Unmitigated,
    Mitigated,
    Both,
}

impl Mode {
    pub fn unmitigated(self) -> bool {
        matches!(self, Mode::Unmitigated | Mode::Both)
    }

    pub fn mitigated(self) -> bool {
        matches!(self, Mode::Mitigated | Mode::Both)
    }
}

impl std::str::FromStr for Mode {
    type Err = QvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unmitigated" => Ok(Mode::Unmitigated),
            "mitigated" => Ok(Mode::Mitigated),
            "both" => Ok(Mode::Both),
            other => Err(QvError::InvalidArgument(format!(
                "unknown mode {other:?} (expected unmitigated, mitigated or both)"
            ))),
        }
    }
}

/// A preset name or explicit rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSpec {
    Preset(String),
    Model(NoiseModel),
}

impl NoiseSpec {
    pub fn resolve(&self) -> Result<NoiseModel> {
        match self {
            NoiseSpec::Preset(name) => NoiseModel::preset(name).ok_or_else(|| {
                QvError::schema(
                    "noise",
                    format!(
                        "unknown preset {name:?} (known: {})",
                        NoiseModel::PRESET_NAMES.join(", ")
                    ),
                )
            }),
            NoiseSpec::Model(m) => {
                m.validate()?;
                Ok(m.clone())
            }
        }
    }
}

fn default_m_range() -> Vec<usize> {
    vec![2, 3, 4, 5]
}
fn default_n_c() -> usize {
    500
}
fn default_n_s() -> u64 {
    10_000
}
fn default_scale_factors() -> Vec<f64> {
    DEFAULT_SCALE_FACTORS.to_vec()
}
fn default_noise() -> NoiseSpec {
    NoiseSpec::Preset("quito".into())
}
fn default_seed() -> u64 {
    42
}
fn default_mode() -> Mode {
    Mode::Both
}
fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}
fn default_batch() -> usize {
    25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_m_range")]
    pub m_range: Vec<usize>,
    #[serde(default = "default_n_c")]
    pub n_c: usize,
    /// Total shots per circuit and mode.
    #[serde(default = "default_n_s")]
    pub n_s: u64,
    #[serde(default = "default_scale_factors")]
    pub scale_factors: Vec<f64>,
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_resamples")]
    pub n_resamples: usize,
    /// Also report the five-group split estimate of sigma.
    #[serde(default)]
    pub group_split: bool,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            m_range: default_m_range(),
            n_c: default_n_c(),
            n_s: default_n_s(),
            scale_factors: default_scale_factors(),
            noise: default_noise(),
            seed: default_seed(),
            mode: default_mode(),
            n_resamples: default_resamples(),
            group_split: false,
            batch_size: default_batch(),
        }
    }
}

impl ExperimentConfig {
    pub fn schedule(&self) -> Result<ScaleFactorSchedule> {
        if !self.scale_factors.contains(&1.0) {
            return Err(QvError::ScheduleMismatch("scale factors must include 1".into()));
        }
        ScaleFactorSchedule::new(self.scale_factors.clone(), self.n_s)
    }

    pub fn is_conformant(&self) -> bool {
        self.n_c >= MIN_CONFORMANT_CIRCUITS
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_range.is_empty() {
            return Err(QvError::schema("m_range", "empty"));
        }
        for (i, &m) in self.m_range.iter().enumerate() {
            if m < 2 {
                return Err(QvError::schema(format!("m_range[{i}]"), format!("{m} < 2")));
            }
            if m > crate::sim::MAX_DENSITY_QUBITS {
                return Err(QvError::schema(
                    format!("m_range[{i}]"),
                    format!("{m} exceeds the simulator limit of {}", crate::sim::MAX_DENSITY_QUBITS),
                ));
            }
            if self.m_range[..i].contains(&m) {
                return Err(QvError::schema(format!("m_range[{i}]"), format!("duplicate {m}")));
            }
        }
        if self.n_c == 0 {
            return Err(QvError::schema("n_c", "must be positive"));
        }
        if self.n_s == 0 {
            return Err(QvError::schema("n_s", "must be positive"));
        }
        if self.n_resamples == 0 {
            return Err(QvError::schema("n_resamples", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(QvError::schema("batch_size", "must be positive"));
        }
        self.noise.resolve()?;
        self.schedule()?;
        Ok(())
    }
}

/// Parses `"2..5"` (inclusive), `"2,3,4"` or `"4"`.
pub fn parse_qubit_range(text: &str) -> Result<Vec<usize>> {
    let bad = || QvError::InvalidArgument(format!("invalid qubit range {text:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    if let Some((lo, hi)) = text.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let (lo, hi) = (num(lo)?, num(hi)?);
        if lo > hi {
            return Err(bad());
        }
        Ok((lo..=hi).collect())
    } else {
        text.split(',').map(num).collect()
    }
}
