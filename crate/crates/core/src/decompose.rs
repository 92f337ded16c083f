//! Two-qubit KAK decomposition onto a fixed three-CNOT template.
//!
//! A block `U ∈ SU(4)` is written as
//! `U = e^{iφ} (A₁ ⊗ A₂) · exp(i(a XX + b YY + c ZZ)) · (B₁ ⊗ B₂)`
//! using the magic basis, in which local gates are real orthogonal and the
//! interaction term is diagonal. The interaction term is then realized with
//! three CNOTs and single-qubit rotations.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use crate::circuit::{Circuit, Gate, QvModelCircuit};
use crate::error::{QvError, Result};
use crate::linalg::{self, kron2, Mat2, Mat4, C64, I, ZERO};

/// Deviation above which a block decomposition is treated as a numerical breakdown.
pub const KAK_FAILURE_THRESHOLD: f64 = 1e-6;

/// Maximum accepted deviation for a whole decomposed circuit.
pub const CIRCUIT_DEVIATION_LIMIT: f64 = 1e-8;

const DIAGONALIZATION_TOLERANCE: f64 = 1e-13;
const DIAGONALIZATION_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub cnot_count: usize,
    pub max_unitary_deviation: f64,
}

/// Decomposition of one SU(4) block.
#[derive(Debug, Clone, PartialEq)]
pub struct KakDecomposition {
    pub global_phase: f64,
    /// Local gates applied after the interaction: `(first, second)`.
    pub after: (Mat2, Mat2),
    /// Interaction coefficients of `exp(i(a XX + b YY + c ZZ))`.
    pub interaction: [f64; 3],
    /// Local gates applied before the interaction.
    pub before: (Mat2, Mat2),
}

fn magic_basis() -> Mat4 {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let hi = I * FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let b = Mat4::new(
        h,    hi,   ZERO, ZERO,
        ZERO, ZERO, hi,   h,
        ZERO, ZERO, hi,   -h,
        h,    -hi,  ZERO, ZERO,
    );
    b
}

/// Diagonals of XX, YY and ZZ in the magic basis.
fn magic_interaction_signs() -> [[f64; 3]; 4] {
    let b = magic_basis();
    let bd = b.adjoint();
    let x = pauli2(&linalg::pauli_x());
    let y = pauli2(&linalg::pauli_y());
    let z = pauli2(&linalg::pauli_z());
    let dx = bd * x * b;
    let dy = bd * y * b;
    let dz = bd * z * b;
    let mut s = [[0.0; 3]; 4];
    for j in 0..4 {
        s[j] = [dx[(j, j)].re, dy[(j, j)].re, dz[(j, j)].re];
    }
    s
}

fn pauli2(p: &Mat2) -> Mat4 {
    kron2(p, p)
}

/// `exp(i(a XX + b YY + c ZZ))`
pub fn interaction_unitary(a: f64, b: f64, c: f64) -> Mat4 {
    let mb = magic_basis();
    let signs = magic_interaction_signs();
    let d = Mat4::from_diagonal(&Vector4::from_fn(|j, _| {
        let [x, y, z] = signs[j];
        C64::from_polar(1.0, a * x + b * y + c * z)
    }));
    mb * d * mb.adjoint()
}

/// Splits `m ≈ A ⊗ B` into its two factors.
fn split_tensor_product(m: &Mat4) -> (Mat2, Mat2) {
    let block = |i: usize, j: usize| Mat2::from_fn(|r, c| m[(2 * i + r, 2 * j + c)]);
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for i in 0..2 {
        for j in 0..2 {
            let n = block(i, j).norm();
            if n > best {
                (bi, bj, best) = (i, j, n);
            }
        }
    }
    let blk = block(bi, bj);
    let second = blk / blk.determinant().sqrt();
    let second_adj = second.adjoint();
    let first = Mat2::from_fn(|i, j| (second_adj * block(i, j)).trace() * 0.5);
    (first, second)
}

fn real_part(m: &Mat4) -> Matrix4<f64> {
    m.map(|z| z.re)
}

fn imag_part(m: &Mat4) -> Matrix4<f64> {
    m.map(|z| z.im)
}

fn off_diagonal_norm(m: &Mat4) -> f64 {
    let mut worst = 0.0_f64;
    for r in 0..4 {
        for c in 0..4 {
            if r != c {
                worst = worst.max(m[(r, c)].norm());
            }
        }
    }
    worst
}

/// Finds a real orthogonal `P` (det +1) with `Pᵀ M P` diagonal for a
/// symmetric unitary `M`.
///
/// Real and imaginary parts of `M` commute, so a generic real combination of
/// them shares its eigenvectors with `M`.
fn diagonalize_symmetric_unitary(m: &Mat4) -> (Matrix4<f64>, Vector4<C64>) {
    let re = real_part(m);
    let im = imag_part(m);
    let mut rng = crate::rng::rng_from_seed(0x5eed_ca7a);
    let mut best: Option<(f64, Matrix4<f64>)> = None;
    for attempt in 0..DIAGONALIZATION_ATTEMPTS {
        let (wr, wi) = if attempt == 0 {
            (1.0, 0.0)
        } else {
            (rng.random::<f64>(), rng.random::<f64>())
        };
        let combo = re * wr + im * wi;
        let combo = (combo + combo.transpose()) * 0.5;
        let p = SymmetricEigen::new(combo).eigenvectors;
        let pc = p.map(|x| C64::new(x, 0.0));
        let d = pc.transpose() * m * pc;
        let off = off_diagonal_norm(&d);
        if best.as_ref().is_none_or(|(b, _)| off < *b) {
            best = Some((off, p));
        }
        if off <= DIAGONALIZATION_TOLERANCE {
            break;
        }
    }
    let (_, mut p) = best.expect("at least one attempt");
    if p.determinant() < 0.0 {
        for r in 0..4 {
            p[(r, 0)] = -p[(r, 0)];
        }
    }
    let pc = p.map(|x| C64::new(x, 0.0));
    let d = (pc.transpose() * m * pc).diagonal();
    (p, d)
}

/// KAK-decomposes an arbitrary 4×4 unitary.
pub fn kak_decompose(u: &Mat4) -> Result<KakDecomposition> {
    let det = u.determinant();
    if !(det.norm() - 1.0).abs().is_finite() || (det.norm() - 1.0).abs() > 1e-9 {
        return Err(QvError::InvalidGate(format!(
            "block is not unitary (|det| = {})",
            det.norm()
        )));
    }
    let phase_in = det.arg() / 4.0;
    let su = u * C64::from_polar(1.0, -phase_in);

    let b = magic_basis();
    let bd = b.adjoint();
    let up = bd * su * b;
    let m2 = up.transpose() * up;
    let (p, d) = diagonalize_symmetric_unitary(&m2);

    let mut s: Vec<C64> = d.iter().map(|z| (z / z.norm()).sqrt()).collect();
    let prod: C64 = s.iter().product();
    if prod.re < 0.0 {
        s[0] = -s[0];
    }

    let pc = p.map(|x| C64::new(x, 0.0));
    let s_inv = Mat4::from_diagonal(&Vector4::from_fn(|j, _| s[j].inv()));
    let k1 = up * pc * s_inv;
    let k1 = k1.map(|z| C64::new(z.re, 0.0));
    let k2 = pc.transpose();

    let left = b * k1 * bd;
    let right = b * k2 * bd;
    let after = split_tensor_product(&left);
    let before = split_tensor_product(&right);

    // arg(s_j) = a x_j + b y_j + c z_j + φ
    let signs = magic_interaction_signs();
    let system = Matrix4::<f64>::from_fn(|j, k| if k < 3 { signs[j][k] } else { 1.0 });
    let rhs = Vector4::from_fn(|j, _| s[j].arg());
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| QvError::NumericalFault("singular interaction system".into()))?;

    Ok(KakDecomposition {
        global_phase: phase_in + sol[3],
        after,
        interaction: [sol[0], sol[1], sol[2]],
        before,
    })
}

impl KakDecomposition {
    pub fn to_matrix(&self) -> Mat4 {
        let [a, b, c] = self.interaction;
        kron2(&self.after.0, &self.after.1)
            * interaction_unitary(a, b, c)
            * kron2(&self.before.0, &self.before.1)
            * C64::from_polar(1.0, self.global_phase)
    }

    /// Gate sequence on the ordered pair `(first, second)`: single-qubit
    /// gates around exactly three CNOTs.
    ///
    /// The interaction `exp(i(a XX + b YY + c ZZ))` equals, up to phase,
    /// `Rz(π/2)₂ · CX₂₁ · (Rz(π/2 − 2c) ⊗ Ry(π/2 − 2a)) · CX₁₂ · Ry(2b − π/2)₂ · CX₂₁ · Rz(−π/2)₁`
    /// in time order.
    pub fn gates(&self, first: usize, second: usize) -> Vec<Gate> {
        let [a, b, c] = self.interaction;
        let one = |target: usize, unitary: Mat2| Gate::OneQubit { unitary, target };
        vec![
            one(first, self.before.0),
            one(second, linalg::rz(FRAC_PI_2) * self.before.1),
            Gate::Cnot {
                control: second,
                target: first,
            },
            one(first, linalg::rz(FRAC_PI_2 - 2.0 * c)),
            one(second, linalg::ry(FRAC_PI_2 - 2.0 * a)),
            Gate::Cnot {
                control: first,
                target: second,
            },
            one(second, linalg::ry(2.0 * b - FRAC_PI_2)),
            Gate::Cnot {
                control: second,
                target: first,
            },
            one(first, self.after.0 * linalg::rz(-FRAC_PI_2)),
            one(second, self.after.1),
        ]
    }
}

/// Dense 4×4 unitary of a gate list acting on a pair that includes `first`,
/// in block index order `2*bit_first + bit_other`.
pub fn pair_unitary(gates: &[Gate], first: usize) -> Mat4 {
    let mut u = Mat4::identity();
    for g in gates {
        let step = match g {
            Gate::OneQubit { unitary, target } if *target == first => kron2(unitary, &Mat2::identity()),
            Gate::OneQubit { unitary, .. } => kron2(&Mat2::identity(), unitary),
            Gate::Cnot { control, .. } if *control == first => linalg::cnot_first_controls(),
            Gate::Cnot { .. } => linalg::cnot_second_controls(),
        };
        u = step * u;
    }
    u
}

/// Decomposes one block into gates on `(first, second)` and returns the
/// reconstruction deviation (global phase removed).
pub fn decompose_block(block: &Mat4, first: usize, second: usize) -> Result<(Vec<Gate>, f64)> {
    let kak = kak_decompose(block)?;
    let gates = kak.gates(first, second);
    let deviation = linalg::phase_aligned_distance_mat4(&pair_unitary(&gates, first), block);
    if deviation.is_nan() || deviation > KAK_FAILURE_THRESHOLD {
        return Err(QvError::DecompositionFailed {
            deviation,
            limit: KAK_FAILURE_THRESHOLD,
        });
    }
    Ok((gates, deviation))
}

/// Compiles a model circuit into the {1Q, CNOT} gate set, three CNOTs per block.
pub fn decompose_to_cnots(model: &QvModelCircuit) -> Result<(Circuit, DecompositionReport)> {
    let mut gates = Vec::with_capacity(model.block_count() * 10);
    let mut worst = 0.0_f64;
    for layer in &model.layers {
        for ((p, q), block) in layer.pairs().zip(&layer.blocks) {
            let (g, dev) = decompose_block(block, p, q)?;
            worst = worst.max(dev);
            gates.extend(g);
        }
    }
    if worst > CIRCUIT_DEVIATION_LIMIT {
        return Err(QvError::DecompositionFailed {
            deviation: worst,
            limit: CIRCUIT_DEVIATION_LIMIT,
        });
    }
    let circuit = Circuit::from_parts_unchecked(model.num_qubits, gates);
    let report = DecompositionReport {
        cnot_count: circuit.cnot_count(),
        max_unitary_deviation: worst,
    };
    Ok((circuit, report))
}
