//! Browser bindings for three interactive views: Richardson extrapolation of
//! user-entered data, the heavy-output distribution of one random circuit, and
//! the exact effect of zero-noise extrapolation on small noisy ensembles.
//!
//! Every export returns a JSON string. The `*_json` functions hold the logic
//! and are callable from native code.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qvx_core::circuit::generate_qv_circuit;
use qvx_core::decompose::decompose_to_cnots;
use qvx_core::heavy::{compute_heavy_set, ideal_heavy_probability};
use qvx_core::rng::derive_seed;
use qvx_core::sim::{ideal_probabilities, index_to_bitstring, noisy_expectation, NoiseModel};
use qvx_core::stats::{NOISELESS_ASYMPTOTE, THRESHOLD};
use qvx_core::zne::{extrapolate, fold_circuit, parse_scale_factors, richardson_coefficients};

const MAX_DEMO_QUBITS: usize = 5;
const MAX_DEMO_CIRCUITS: usize = 200;
const CURVE_POINTS: usize = 200;

fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect()
}

/// Lagrange interpolant through `(xs, ys)` evaluated at `x`.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    xs.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let w: f64 = xs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| (x - xj) / (xi - xj))
                .product();
            w * ys[i]
        })
        .sum()
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct RichardsonView {
    lambdas: Vec<f64>,
    values: Vec<f64>,
    etas: Vec<f64>,
    estimate: f64,
    curve: Vec<[f64; 2]>,
}

pub fn richardson_json(lambdas: &str, values: &str) -> Result<String, String> {
    let lambdas = parse_scale_factors(lambdas).map_err(|e| e.to_string())?;
    let values = parse_values(values)?;
    let coeffs = richardson_coefficients(&lambdas).map_err(|e| e.to_string())?;
    let estimate = extrapolate(&values, &coeffs).map_err(|e| e.to_string())?;
    let top = lambdas.iter().copied().fold(1.0, f64::max);
    let curve = (0..=CURVE_POINTS)
        .map(|k| {
            let x = top * k as f64 / CURVE_POINTS as f64;
            [x, interpolate(&lambdas, &values, x)]
        })
        .collect();
    to_json(&RichardsonView {
        lambdas,
        values,
        etas: coeffs.etas,
        estimate,
        curve,
    })
}

#[derive(Serialize)]
struct Outcome {
    bitstring: String,
    probability: f64,
    heavy: bool,
}

#[derive(Serialize)]
struct HeavyView {
    num_qubits: usize,
    seed: u64,
    median: f64,
    heavy_probability: f64,
    asymptote: f64,
    cnot_count: usize,
    /// Sorted by decreasing probability.
    outcomes: Vec<Outcome>,
}

pub fn heavy_output_json(m: usize, seed: u64) -> Result<String, String> {
    if m > MAX_DEMO_QUBITS {
        return Err(format!("the demo supports at most {MAX_DEMO_QUBITS} qubits"));
    }
    let model = generate_qv_circuit(m, seed).map_err(|e| e.to_string())?;
    let probs = ideal_probabilities(&model).map_err(|e| e.to_string())?;
    let hs = compute_heavy_set(&probs).map_err(|e| e.to_string())?;
    let (compiled, _) = decompose_to_cnots(&model).map_err(|e| e.to_string())?;
    let mut outcomes: Vec<Outcome> = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| Outcome {
            bitstring: index_to_bitstring(i, m),
            probability: p,
            heavy: hs.contains(i),
        })
        .collect();
    outcomes.sort_by(|a, b| b.probability.total_cmp(&a.probability));
    to_json(&HeavyView {
        num_qubits: m,
        seed,
        median: hs.median_probability,
        heavy_probability: ideal_heavy_probability(&probs, &hs).map_err(|e| e.to_string())?,
        asymptote: NOISELESS_ASYMPTOTE,
        cnot_count: compiled.cnot_count(),
        outcomes,
    })
}

#[derive(Serialize)]
struct ZneView {
    num_qubits: usize,
    circuits: usize,
    eps_cnot: f64,
    lambdas: Vec<f64>,
    /// Mean exact heavy probability at each scale factor.
    noisy: Vec<f64>,
    ideal: f64,
    unmitigated: f64,
    mitigated: f64,
    threshold: f64,
}

/// Exact (shot-free) ensemble means of the heavy-output probability with
/// "quito" 1-qubit and readout rates and the given CNOT error rate.
pub fn zne_ensemble_json(m: usize, circuits: usize, eps_cnot: f64, lambdas: &str, seed: u64) -> Result<String, String> {
    if m > MAX_DEMO_QUBITS {
        return Err(format!("the demo supports at most {MAX_DEMO_QUBITS} qubits"));
    }
    if circuits == 0 || circuits > MAX_DEMO_CIRCUITS {
        return Err(format!("circuit count must be between 1 and {MAX_DEMO_CIRCUITS}"));
    }
    let quito = NoiseModel::preset("quito").expect("preset");
    let noise = NoiseModel::new(quito.eps_1q, eps_cnot, quito.eps_readout).map_err(|e| e.to_string())?;
    let lambdas = parse_scale_factors(lambdas).map_err(|e| e.to_string())?;
    if !lambdas.contains(&1.0) {
        return Err("scale factors must include 1".into());
    }
    let coeffs = richardson_coefficients(&lambdas).map_err(|e| e.to_string())?;
    let one = lambdas.iter().position(|&l| l == 1.0).expect("checked");

    let mut noisy = vec![0.0; lambdas.len()];
    let (mut ideal, mut mitigated) = (0.0, 0.0);
    for i in 0..circuits {
        let model = generate_qv_circuit(m, derive_seed(seed, &[m as u64, i as u64])).map_err(|e| e.to_string())?;
        let probs = ideal_probabilities(&model).map_err(|e| e.to_string())?;
        let hs = compute_heavy_set(&probs).map_err(|e| e.to_string())?;
        let (compiled, _) = decompose_to_cnots(&model).map_err(|e| e.to_string())?;
        let per = lambdas
            .iter()
            .map(|&l| {
                let folded = fold_circuit(&compiled, l)?;
                noisy_expectation(&folded, &noise, &hs)
            })
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| e.to_string())?;
        for (acc, v) in noisy.iter_mut().zip(&per) {
            *acc += v;
        }
        ideal += hs.projector_expectation(&probs);
        mitigated += extrapolate(&per, &coeffs).map_err(|e| e.to_string())?;
    }
    let n = circuits as f64;
    noisy.iter_mut().for_each(|v| *v /= n);
    to_json(&ZneView {
        num_qubits: m,
        circuits,
        eps_cnot,
        unmitigated: noisy[one],
        lambdas,
        noisy,
        ideal: ideal / n,
        mitigated: mitigated / n,
        threshold: THRESHOLD,
    })
}

#[wasm_bindgen]
pub fn richardson(lambdas: &str, values: &str) -> Result<String, JsError> {
    richardson_json(lambdas, values).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn heavy_output(m: usize, seed: u64) -> Result<String, JsError> {
    heavy_output_json(m, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn zne_ensemble(m: usize, circuits: usize, eps_cnot: f64, lambdas: &str, seed: u64) -> Result<String, JsError> {
    zne_ensemble_json(m, circuits, eps_cnot, lambdas, seed).map_err(|e| JsError::new(&e))
}
