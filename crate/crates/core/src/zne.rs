//! Zero-noise extrapolation: local CNOT folding, Richardson coefficients and
//! fair shot budgeting.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{QvError, Result};

pub const DEFAULT_SCALE_FACTORS: [f64; 5] = [1.0, 3.0, 5.0, 7.0, 9.0];

/// Noise scale factors together with the per-factor share of the shot budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFactorSchedule {
    pub lambdas: Vec<f64>,
    pub shots_per_factor: u64,
}

impl ScaleFactorSchedule {
    /// Builds a folding schedule for a total budget of `total_shots`.
    pub fn new(lambdas: Vec<f64>, total_shots: u64) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(QvError::Empty("scale factors"));
        }
        for (i, &l) in lambdas.iter().enumerate() {
            fold_multiplicity(l)?;
            if lambdas[..i].contains(&l) {
                return Err(QvError::DuplicateScaleFactor(l));
            }
        }
        let shots_per_factor = allocate_shots(total_shots, lambdas.len())?;
        Ok(ScaleFactorSchedule {
            lambdas,
            shots_per_factor,
        })
    }

    pub fn default_for(total_shots: u64) -> Result<Self> {
        Self::new(DEFAULT_SCALE_FACTORS.to_vec(), total_shots)
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn total_shots(&self) -> u64 {
        self.shots_per_factor * self.lambdas.len() as u64
    }

    pub fn coefficients(&self) -> Result<RichardsonCoefficients> {
        richardson_coefficients(&self.lambdas)
    }
}

/// Parses `"1,3,5,7,9"`.
pub fn parse_scale_factors(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| QvError::InvalidArgument(format!("invalid scale factor {t:?}")))
        })
        .collect()
}

/// Weights `η_i` aligned with the scale factors they were computed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichardsonCoefficients {
    pub lambdas: Vec<f64>,
    pub etas: Vec<f64>,
}

impl RichardsonCoefficients {
    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.etas.iter().map(|e| e * e).sum()
    }
}

fn fold_multiplicity(lambda: f64) -> Result<usize> {
    let ok = lambda.is_finite() && lambda >= 1.0 && lambda.fract() == 0.0 && (lambda as u64) % 2 == 1;
    if ok {
        Ok(lambda as usize)
    } else {
        Err(QvError::InvalidScaleFactor(lambda))
    }
}

/// Replaces every CNOT by `lambda` consecutive copies.
pub fn fold_circuit(c: &Circuit, lambda: f64) -> Result<Circuit> {
    let times = fold_multiplicity(lambda)?;
    let mut gates = Vec::with_capacity(c.one_qubit_count() + c.cnot_count() * times);
    for g in c.gates() {
        match g {
            Gate::Cnot { .. } => gates.extend(std::iter::repeat_n(g.clone(), times)),
            _ => gates.push(g.clone()),
        }
    }
    Ok(Circuit::from_parts_unchecked(c.num_qubits(), gates))
}

/// `η_i = Π_{j≠i} λ_j / (λ_j − λ_i)`
pub fn richardson_coefficients(lambdas: &[f64]) -> Result<RichardsonCoefficients> {
    if lambdas.is_empty() {
        return Err(QvError::Empty("scale factors"));
    }
    for (i, &l) in lambdas.iter().enumerate() {
        if !l.is_finite() {
            return Err(QvError::InvalidArgument(format!("non-finite scale factor {l}")));
        }
        if lambdas[..i].contains(&l) {
            return Err(QvError::DuplicateScaleFactor(l));
        }
    }
    let etas = lambdas
        .iter()
        .enumerate()
        .map(|(i, &li)| {
            lambdas
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &lj)| lj / (lj - li))
                .product()
        })
        .collect();
    Ok(RichardsonCoefficients {
        lambdas: lambdas.to_vec(),
        etas,
    })
}

/// `Σ η_i · value_i`; the result is not clamped.
pub fn extrapolate(values: &[f64], coeffs: &RichardsonCoefficients) -> Result<f64> {
    if values.len() != coeffs.etas.len() {
        return Err(QvError::LengthMismatch {
            expected: coeffs.etas.len(),
            got: values.len(),
        });
    }
    Ok(values.iter().zip(&coeffs.etas).map(|(v, e)| v * e).sum())
}

/// `⌊n_s / k⌋`; any remainder is left unused.
pub fn allocate_shots(total_shots: u64, factors: usize) -> Result<u64> {
    if factors == 0 {
        return Err(QvError::Empty("scale factors"));
    }
    if total_shots < factors as u64 {
        return Err(QvError::InsufficientShots {
            total: total_shots,
            factors,
        });
    }
    Ok(total_shots / factors as u64)
}
