//! Variance propagation for linear-combination estimators, bootstrap error
//! bars and the pass/fail rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QvError, Result};
use crate::par;
use crate::rng::{derive_seed, tagged_rng, Stream};
use crate::zne::RichardsonCoefficients;

/// Heavy-output threshold `2/3`.
pub const THRESHOLD: f64 = 2.0 / 3.0;

/// Large-width limit of the ideal heavy-output probability, `(1 + ln 2) / 2`.
pub const NOISELESS_ASYMPTOTE: f64 = (1.0 + std::f64::consts::LN_2) / 2.0;

pub const DEFAULT_RESAMPLES: usize = 500;

/// Minimum circuit count for a protocol-conformant run.
pub const MIN_CONFORMANT_CIRCUITS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorObservation {
    pub lambda: f64,
    /// Measured heavy fraction at this scale factor.
    pub expectation: f64,
    pub shots: u64,
}

/// Mitigated heavy-output probability of one circuit and the raw data behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitEstimate {
    pub e_c: f64,
    pub per_factor: Vec<FactorObservation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub h_d: f64,
    pub sigma: f64,
    pub n_c: usize,
    pub passed: bool,
}

/// `σ_C² = Σ_j |η_j|² Ẽ_j (1 − Ẽ_j) / n_j`
pub fn analytic_variance_circuit(est: &CircuitEstimate, coeffs: &RichardsonCoefficients) -> Result<f64> {
    if est.per_factor.len() != coeffs.etas.len() {
        return Err(QvError::LengthMismatch {
            expected: coeffs.etas.len(),
            got: est.per_factor.len(),
        });
    }
    let mut total = 0.0;
    for (obs, eta) in est.per_factor.iter().zip(&coeffs.etas) {
        if obs.shots == 0 {
            return Err(QvError::ZeroShots);
        }
        if !(0.0..=1.0).contains(&obs.expectation) {
            return Err(QvError::InvalidArgument(format!(
                "noisy expectation {} outside [0, 1]",
                obs.expectation
            )));
        }
        total += eta * eta * obs.expectation * (1.0 - obs.expectation) / obs.shots as f64;
    }
    Ok(total)
}

/// `σ² = Σ_C σ_C² / n_c²`
pub fn analytic_variance_total(circuit_variances: &[f64]) -> Result<f64> {
    if circuit_variances.is_empty() {
        return Err(QvError::Empty("circuit variances"));
    }
    let n = circuit_variances.len() as f64;
    Ok(circuit_variances.iter().sum::<f64>() / (n * n))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (`1/N`), Welford accumulation.
fn population_std(xs: &[f64]) -> f64 {
    let (mut mu, mut m2) = (0.0, 0.0);
    for (k, &x) in xs.iter().enumerate() {
        let delta = x - mu;
        mu += delta / (k + 1) as f64;
        m2 += delta * (x - mu);
    }
    (m2 / xs.len() as f64).sqrt()
}

fn bootstrap_means(estimates: &[f64], n_resamples: usize, seed: u64) -> Vec<f64> {
    let n = estimates.len();
    par::map_range(n_resamples, |j| {
        let mut rng = tagged_rng(derive_seed(seed, &[j as u64]), Stream::Bootstrap);
        let sum: f64 = (0..n).map(|_| estimates[rng.random_range(0..n)]).sum();
        sum / n as f64
    })
}

/// Standard deviation of `n_resamples` bootstrap means.
///
/// Resample `j` always uses the same substream, so for a fixed seed the
/// first `N` resamples are shared between calls with different `N`.
pub fn bootstrap_sigma(estimates: &[f64], n_resamples: usize, seed: u64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(QvError::Empty("per-circuit estimates"));
    }
    if n_resamples == 0 {
        return Err(QvError::InvalidArgument("bootstrap needs at least one resample".into()));
    }
    Ok(population_std(&bootstrap_means(estimates, n_resamples, seed)))
}

/// `σ(N)` for each requested resample count.
pub fn bootstrap_sigma_sweep(estimates: &[f64], resample_counts: &[usize], seed: u64) -> Result<Vec<(usize, f64)>> {
    if estimates.is_empty() {
        return Err(QvError::Empty("per-circuit estimates"));
    }
    let max = resample_counts.iter().copied().max().unwrap_or(0);
    if max == 0 || resample_counts.contains(&0) {
        return Err(QvError::InvalidArgument("bootstrap needs at least one resample".into()));
    }
    let means = bootstrap_means(estimates, max, seed);
    Ok(resample_counts
        .iter()
        .map(|&n| (n, population_std(&means[..n])))
        .collect())
}

/// Cross-check: split the circuits into `groups` contiguous groups and use the
/// spread of group means, scaled to the full sample.
pub fn group_split_sigma(estimates: &[f64], groups: usize) -> Result<f64> {
    if groups < 2 {
        return Err(QvError::InvalidArgument("group split needs at least 2 groups".into()));
    }
    if estimates.len() < groups {
        return Err(QvError::InvalidArgument(format!(
            "{} estimates cannot form {groups} groups",
            estimates.len()
        )));
    }
    let size = estimates.len() / groups;
    let means: Vec<f64> = estimates.chunks_exact(size).take(groups).map(mean).collect();
    let mu = mean(&means);
    let sample_var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (groups - 1) as f64;
    Ok((sample_var / groups as f64).sqrt())
}

/// Passes iff `h_d > 2/3 + 2σ` (strict).
pub fn volume_decision(h_d: f64, sigma: f64, n_c: usize) -> Result<VolumeEstimate> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(QvError::InvalidArgument(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    Ok(VolumeEstimate {
        h_d,
        sigma,
        n_c,
        passed: h_d > THRESHOLD + 2.0 * sigma,
    })
}
