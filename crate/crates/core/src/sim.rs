//! Dense simulation: ideal statevectors, noisy density matrices and shot sampling.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, QvModelCircuit};
use crate::error::{QvError, Result};
use crate::heavy::HeavySet;
use crate::linalg::{Mat2, C64, ONE, ZERO};
use crate::rng::{tagged_rng, Stream};

pub const MAX_STATEVECTOR_QUBITS: usize = 12;
pub const MAX_DENSITY_QUBITS: usize = 10;

/// Depolarizing and readout error rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub eps_1q: f64,
    pub eps_cnot: f64,
    /// Symmetric bit-flip probability per measured qubit.
    pub eps_readout: f64,
    #[serde(default)]
    pub label: String,
}

impl NoiseModel {
    pub fn new(eps_1q: f64, eps_cnot: f64, eps_readout: f64) -> Result<Self> {
        let nm = NoiseModel {
            eps_1q,
            eps_cnot,
            eps_readout,
            label: "custom".into(),
        };
        nm.validate()?;
        Ok(nm)
    }

    pub fn zero() -> Self {
        NoiseModel {
            eps_1q: 0.0,
            eps_cnot: 0.0,
            eps_readout: 0.0,
            label: "noiseless".into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_zero(&self) -> bool {
        self.eps_1q == 0.0 && self.eps_cnot == 0.0 && self.eps_readout == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_1q", self.eps_1q),
            ("eps_cnot", self.eps_cnot),
            ("eps_readout", self.eps_readout),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(QvError::schema(name, format!("rate {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Averaged device error rates for the five-qubit devices Lima, Belem
    /// and Quito, plus `noiseless`.
    pub fn preset(name: &str) -> Option<NoiseModel> {
        let (e1, e2, em) = match name {
            "lima" => (4.446e-4, 1.131e-2, 3.790e-2),
            "belem" => (2.808e-4, 1.098e-2, 2.868e-2),
            "quito" => (2.980e-4, 8.292e-3, 2.546e-2),
            "noiseless" | "zero" => (0.0, 0.0, 0.0),
            _ => return None,
        };
        Some(NoiseModel {
            eps_1q: e1,
            eps_cnot: e2,
            eps_readout: em,
            label: name.into(),
        })
    }

    pub const PRESET_NAMES: [&'static str; 4] = ["lima", "belem", "quito", "noiseless"];
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn zero_state(num_qubits: usize) -> Result<Self> {
        if num_qubits > MAX_STATEVECTOR_QUBITS {
            return Err(QvError::TooManyQubits {
                what: "statevector",
                max: MAX_STATEVECTOR_QUBITS,
                got: num_qubits,
            });
        }
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Ok(StateVector { num_qubits, amplitudes })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Ideal output distribution `p(z) = |⟨z|C|0⟩|²` from the undecomposed blocks.
pub fn ideal_probabilities(model: &QvModelCircuit) -> Result<Vec<f64>> {
    let mut psi = StateVector::zero_state(model.num_qubits)?;
    model.apply_to(psi.amplitudes_mut());
    Ok(psi.probabilities())
}

/// Ideal output distribution of a compiled circuit.
pub fn circuit_probabilities(c: &Circuit) -> Result<Vec<f64>> {
    let mut psi = StateVector::zero_state(c.num_qubits())?;
    c.apply_to(psi.amplitudes_mut());
    Ok(psi.probabilities())
}

/// Row-major `2^m × 2^m` density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    dim: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn zero_state(num_qubits: usize) -> Result<Self> {
        if num_qubits > MAX_DENSITY_QUBITS {
            return Err(QvError::TooManyQubits {
                what: "density matrix simulation",
                max: MAX_DENSITY_QUBITS,
                got: num_qubits,
            });
        }
        let dim = 1usize << num_qubits;
        let mut entries = vec![ZERO; dim * dim];
        entries[0] = ONE;
        Ok(DensityMatrix {
            num_qubits,
            dim,
            entries,
        })
    }

    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        let mut rho = DensityMatrix::zero_state(num_qubits)?;
        let w = C64::new(1.0 / rho.dim as f64, 0.0);
        rho.entries.iter_mut().for_each(|e| *e = ZERO);
        for i in 0..rho.dim {
            rho.entries[i * rho.dim + i] = w;
        }
        Ok(rho)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.entries[r * self.dim + c]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    /// `ρ → U ρ U†` for a single-qubit `U` on qubit `q`.
    pub fn apply_one_qubit(&mut self, q: usize, u: &Mat2) {
        let dim = self.dim;
        let bit = 1usize << q;
        let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
        // rows: U ρ
        for i in 0..dim {
            if i & bit != 0 {
                continue;
            }
            let j = i | bit;
            for c in 0..dim {
                let a = self.entries[i * dim + c];
                let b = self.entries[j * dim + c];
                self.entries[i * dim + c] = u00 * a + u01 * b;
                self.entries[j * dim + c] = u10 * a + u11 * b;
            }
        }
        // columns: (U ρ) U†
        let (v00, v01, v10, v11) = (u00.conj(), u01.conj(), u10.conj(), u11.conj());
        for row in self.entries.chunks_exact_mut(dim) {
            for i in 0..dim {
                if i & bit != 0 {
                    continue;
                }
                let j = i | bit;
                let (a, b) = (row[i], row[j]);
                row[i] = a * v00 + b * v01;
                row[j] = a * v10 + b * v11;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let dim = self.dim;
        let (bc, bt) = (1usize << control, 1usize << target);
        for i in 0..dim {
            if i & bc != 0 && i & bt == 0 {
                let j = i | bt;
                for c in 0..dim {
                    self.entries.swap(i * dim + c, j * dim + c);
                }
            }
        }
        for row in self.entries.chunks_exact_mut(dim) {
            for i in 0..dim {
                if i & bc != 0 && i & bt == 0 {
                    row.swap(i, i | bt);
                }
            }
        }
    }

    /// `ρ → (1−p) ρ + p · tr_q(ρ) ⊗ I/2`
    pub fn depolarize_one(&mut self, q: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let dim = self.dim;
        let bit = 1usize << q;
        let keep = 1.0 - p;
        for i in (0..dim).filter(|i| i & bit == 0) {
            for j in (0..dim).filter(|j| j & bit == 0) {
                let (i1, j1) = (i | bit, j | bit);
                let a = self.entries[i * dim + j];
                let b = self.entries[i1 * dim + j1];
                let avg = (a + b) * 0.5 * p;
                self.entries[i * dim + j] = a * keep + avg;
                self.entries[i1 * dim + j1] = b * keep + avg;
                self.entries[i * dim + j1] *= keep;
                self.entries[i1 * dim + j] *= keep;
            }
        }
    }

    /// `ρ → (1−p) ρ + p · tr_{q1 q2}(ρ) ⊗ I/4` on the pair.
    pub fn depolarize_two(&mut self, q1: usize, q2: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let dim = self.dim;
        let (b1, b2) = (1usize << q1, 1usize << q2);
        let mask = b1 | b2;
        let offsets = [0, b2, b1, b1 | b2];
        let keep = 1.0 - p;
        for i in (0..dim).filter(|i| i & mask == 0) {
            for j in (0..dim).filter(|j| j & mask == 0) {
                let mut tr = ZERO;
                for &o in &offsets {
                    tr += self.entries[(i | o) * dim + (j | o)];
                }
                let add = tr * 0.25 * p;
                for &oi in &offsets {
                    for &oj in &offsets {
                        let e = &mut self.entries[(i | oi) * dim + (j | oj)];
                        *e *= keep;
                        if oi == oj {
                            *e += add;
                        }
                    }
                }
            }
        }
    }

    /// Runs every gate followed by its depolarizing channel.
    pub fn evolve(&mut self, c: &Circuit, noise: &NoiseModel) -> Result<()> {
        if c.num_qubits() != self.num_qubits {
            return Err(QvError::QubitMismatch {
                expected: self.num_qubits,
                got: c.num_qubits(),
            });
        }
        for g in c.gates() {
            match g {
                Gate::OneQubit { unitary, target } => {
                    self.apply_one_qubit(*target, unitary);
                    self.depolarize_one(*target, noise.eps_1q);
                }
                Gate::Cnot { control, target } => {
                    self.apply_cnot(*control, *target);
                    self.depolarize_two(*control, *target, noise.eps_cnot);
                }
            }
        }
        Ok(())
    }
}

/// Applies a symmetric bit flip with probability `eps` to every qubit of a
/// distribution over `2^m` outcomes.
pub fn apply_readout_error(probs: &mut [f64], num_qubits: usize, eps: f64) {
    if eps == 0.0 {
        return;
    }
    for q in 0..num_qubits {
        let bit = 1usize << q;
        for i in 0..probs.len() {
            if i & bit == 0 {
                let j = i | bit;
                let (a, b) = (probs[i], probs[j]);
                probs[i] = (1.0 - eps) * a + eps * b;
                probs[j] = (1.0 - eps) * b + eps * a;
            }
        }
    }
}

/// Exact measured distribution of `c` under `noise`, readout included.
pub fn noisy_distribution(c: &Circuit, noise: &NoiseModel) -> Result<Vec<f64>> {
    noise.validate()?;
    let mut rho = DensityMatrix::zero_state(c.num_qubits())?;
    rho.evolve(c, noise)?;
    let mut probs = rho.diagonal();
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(QvError::NumericalFault("non-finite density matrix diagonal".into()));
    }
    // roundoff can leave tiny negatives
    for p in probs.iter_mut() {
        *p = p.max(0.0);
    }
    apply_readout_error(&mut probs, c.num_qubits(), noise.eps_readout);
    Ok(probs)
}

/// Measurement outcomes keyed by bitstring.
///
/// Bitstrings are written with qubit `m−1` first, so the string reads as the
/// binary form of the basis index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub num_qubits: usize,
    pub total_shots: u64,
    pub counts: BTreeMap<String, u64>,
}

pub fn index_to_bitstring(index: usize, num_qubits: usize) -> String {
    (0..num_qubits)
        .rev()
        .map(|q| if index >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn bitstring_to_index(s: &str) -> Option<usize> {
    if s.is_empty() || s.len() > usize::BITS as usize {
        return None;
    }
    s.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Some(acc << 1),
        '1' => Some(acc << 1 | 1),
        _ => None,
    })
}

impl Counts {
    pub fn empty(num_qubits: usize) -> Self {
        Counts {
            num_qubits,
            total_shots: 0,
            counts: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, bitstring: impl Into<String>, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(bitstring.into()).or_insert(0) += n;
        self.total_shots += n;
    }

    pub fn from_pairs<S: Into<String>>(num_qubits: usize, pairs: impl IntoIterator<Item = (S, u64)>) -> Self {
        let mut c = Counts::empty(num_qubits);
        for (s, n) in pairs {
            c.add(s, n);
        }
        c
    }

    pub fn get(&self, bitstring: &str) -> u64 {
        self.counts.get(bitstring).copied().unwrap_or(0)
    }

    /// Checks bitstring widths and the shot total.
    pub fn validate(&self) -> Result<()> {
        let mut sum = 0u64;
        for (s, &n) in &self.counts {
            if s.len() != self.num_qubits || bitstring_to_index(s).is_none() {
                return Err(QvError::schema(
                    format!("counts[{s:?}]"),
                    format!("not a {}-bit bitstring", self.num_qubits),
                ));
            }
            sum += n;
        }
        if sum != self.total_shots {
            return Err(QvError::schema(
                "total_shots",
                format!("counts sum to {sum}, total_shots is {}", self.total_shots),
            ));
        }
        Ok(())
    }
}

/// Draws a multinomial sample by sequential conditional binomials.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], num_qubits: usize, shots: u64, rng: &mut R) -> Result<Counts> {
    if shots == 0 {
        return Err(QvError::ZeroShots);
    }
    let mut counts = Counts::empty(num_qubits);
    let mut remaining = shots;
    let mut mass_left = 1.0_f64;
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if !p.is_finite() || p < 0.0 {
            return Err(QvError::NumericalFault(format!("invalid probability {p} at {i}")));
        }
        let n = if i == last {
            remaining
        } else if p <= 0.0 {
            0
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| QvError::NumericalFault(e.to_string()))?
                .sample(rng)
        };
        counts.add(index_to_bitstring(i, num_qubits), n);
        remaining -= n;
        mass_left -= p;
        if mass_left <= 0.0 {
            mass_left = f64::MIN_POSITIVE;
        }
    }
    Ok(counts)
}

/// Executes `c` on the noisy simulator and samples `shots` outcomes.
pub fn run_noisy(c: &Circuit, noise: &NoiseModel, shots: u64, rng_seed: u64) -> Result<Counts> {
    if shots == 0 {
        return Err(QvError::ZeroShots);
    }
    let probs = noisy_distribution(c, noise)?;
    let mut rng = tagged_rng(rng_seed, Stream::Shots);
    sample_counts(&probs, c.num_qubits(), shots, &mut rng)
}

/// Exact `tr(Π ρ)` for the heavy projector, readout channel included.
pub fn noisy_expectation(c: &Circuit, noise: &NoiseModel, observable: &HeavySet) -> Result<f64> {
    if observable.num_qubits != c.num_qubits() {
        return Err(QvError::QubitMismatch {
            expected: observable.num_qubits,
            got: c.num_qubits(),
        });
    }
    let probs = noisy_distribution(c, noise)?;
    Ok(observable.projector_expectation(&probs))
}
