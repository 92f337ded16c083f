//! Quantum volume benchmarking with and without zero-noise extrapolation.
//!
//! The pipeline generates quantum volume model circuits, compiles their
//! SU(4) blocks to a three-CNOT template, scales noise by local CNOT folding,
//! simulates the folded circuits under a depolarizing + readout noise model,
//! and scores heavy outputs. Richardson extrapolation combines the scaled
//! results at an equal total shot budget, and bootstrap resampling provides
//! the error bars for the `h_d > 2/3 + 2σ` decision.

pub mod circuit;
pub mod decompose;
pub mod error;
pub mod harness;
pub mod heavy;
pub mod linalg;
mod par;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod zne;

pub use circuit::{circuit_unitary, generate_qv_circuit, Circuit, Gate, QvModelCircuit};
pub use decompose::{decompose_to_cnots, DecompositionReport};
pub use error::{QvError, Result};
pub use heavy::{compute_heavy_set, heavy_fraction, ideal_heavy_probability, HeavySet};
pub use sim::{ideal_probabilities, noisy_expectation, run_noisy, Counts, NoiseModel};
pub use stats::{bootstrap_sigma, volume_decision, VolumeEstimate};
pub use zne::{allocate_shots, extrapolate, fold_circuit, richardson_coefficients, ScaleFactorSchedule};
