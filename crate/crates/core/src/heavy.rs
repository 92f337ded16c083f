//! Heavy sets and heavy-output scoring.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{QvError, Result};
use crate::sim::{bitstring_to_index, index_to_bitstring, Counts};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Bitstrings whose ideal probability is strictly above the median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "HeavySetDocument", try_from = "HeavySetDocument")]
pub struct HeavySet {
    pub num_qubits: usize,
    pub median_probability: f64,
    /// Basis indices in increasing order.
    pub members: Vec<usize>,
}

/// Persisted form: sorted bitstrings plus the median.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct HeavySetDocument {
    num_qubits: usize,
    median_probability: f64,
    bitstrings: Vec<String>,
}

impl From<HeavySet> for HeavySetDocument {
    fn from(hs: HeavySet) -> Self {
        HeavySetDocument {
            num_qubits: hs.num_qubits,
            median_probability: hs.median_probability,
            bitstrings: hs.bitstrings(),
        }
    }
}

impl TryFrom<HeavySetDocument> for HeavySet {
    type Error = String;

    fn try_from(doc: HeavySetDocument) -> std::result::Result<Self, String> {
        let mut members = Vec::with_capacity(doc.bitstrings.len());
        for s in &doc.bitstrings {
            if s.len() != doc.num_qubits {
                return Err(format!("heavy bitstring {s:?} is not {} bits wide", doc.num_qubits));
            }
            members.push(bitstring_to_index(s).ok_or_else(|| format!("invalid bitstring {s:?}"))?);
        }
        members.sort_unstable();
        members.dedup();
        Ok(HeavySet {
            num_qubits: doc.num_qubits,
            median_probability: doc.median_probability,
            members,
        })
    }
}

impl HeavySet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    pub fn contains_bitstring(&self, s: &str) -> bool {
        s.len() == self.num_qubits && bitstring_to_index(s).is_some_and(|i| self.contains(i))
    }

    pub fn bitstrings(&self) -> Vec<String> {
        self.members
            .iter()
            .map(|&i| index_to_bitstring(i, self.num_qubits))
            .collect()
    }

    /// `Σ_{z∈H} p(z)`, i.e. `tr(Π ρ)` for a diagonal distribution.
    pub fn projector_expectation(&self, probs: &[f64]) -> f64 {
        self.members.iter().map(|&i| probs[i]).sum()
    }

    /// Short stable identifier of the set.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.num_qubits as u64).to_le_bytes());
        h.update(self.median_probability.to_bits().to_le_bytes());
        for &i in &self.members {
            h.update((i as u64).to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }
}

fn validate_distribution(probs: &[f64]) -> Result<usize> {
    let n = probs.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(QvError::InvalidArgument(format!(
            "distribution length {n} is not 2^m with m >= 1"
        )));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(QvError::InvalidArgument(
            "probabilities must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(QvError::NotNormalized(total));
    }
    Ok(n.trailing_zeros() as usize)
}

/// Median as the midpoint of the two central order statistics; membership
/// is strictly above it.
pub fn compute_heavy_set(probs: &[f64]) -> Result<HeavySet> {
    let num_qubits = validate_distribution(probs)?;
    let mut sorted = probs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let half = sorted.len() / 2;
    let median = 0.5 * (sorted[half - 1] + sorted[half]);
    let members = probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > median)
        .map(|(i, _)| i)
        .collect();
    Ok(HeavySet {
        num_qubits,
        median_probability: median,
        members,
    })
}

/// Fraction of shots that landed in the heavy set.
pub fn heavy_fraction(counts: &Counts, hs: &HeavySet) -> Result<f64> {
    if counts.num_qubits != hs.num_qubits {
        return Err(QvError::QubitMismatch {
            expected: hs.num_qubits,
            got: counts.num_qubits,
        });
    }
    if counts.total_shots == 0 {
        return Err(QvError::ZeroShots);
    }
    Ok(heavy_count(counts, hs) as f64 / counts.total_shots as f64)
}

pub fn heavy_count(counts: &Counts, hs: &HeavySet) -> u64 {
    counts
        .counts
        .iter()
        .filter(|(s, _)| hs.contains_bitstring(s))
        .map(|(_, &n)| n)
        .sum()
}

/// Ideal probability mass on the heavy set.
pub fn ideal_heavy_probability(probs: &[f64], hs: &HeavySet) -> Result<f64> {
    let m = validate_distribution(probs)?;
    if m != hs.num_qubits {
        return Err(QvError::QubitMismatch {
            expected: hs.num_qubits,
            got: m,
        });
    }
    Ok(hs.projector_expectation(probs))
}
