//! Circuits over the {single-qubit unitary, CNOT} gate set and quantum volume
//! model circuits.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{QvError, Result};
use crate::linalg::{self, Mat2, Mat4, C64, ONE, ZERO};
use crate::rng::{tagged_rng, Stream};

/// Largest qubit count for which dense unitaries are built.
pub const MAX_DENSE_UNITARY_QUBITS: usize = 12;

const UNITARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    OneQubit { unitary: Mat2, target: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn is_cnot(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::OneQubit { target, .. } => vec![target],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::OneQubit { unitary, target } => Gate::OneQubit {
                unitary: unitary.adjoint(),
                target: *target,
            },
            cx @ Gate::Cnot { .. } => cx.clone(),
        }
    }

    fn validate(&self, num_qubits: usize) -> Result<()> {
        match self {
            Gate::OneQubit { unitary, target } => {
                if *target >= num_qubits {
                    return Err(QvError::InvalidGate(format!(
                        "target {target} out of range for {num_qubits} qubits"
                    )));
                }
                let defect = linalg::unitarity_defect(unitary);
                if defect.is_nan() || defect > UNITARY_TOLERANCE {
                    return Err(QvError::InvalidGate(format!(
                        "single-qubit matrix is not unitary (defect {defect:.3e})"
                    )));
                }
            }
            Gate::Cnot { control, target } => {
                if control == target {
                    return Err(QvError::InvalidGate(format!(
                        "CNOT control and target are both {control}"
                    )));
                }
                if *control >= num_qubits || *target >= num_qubits {
                    return Err(QvError::InvalidGate(format!(
                        "CNOT({control}, {target}) out of range for {num_qubits} qubits"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(QvError::InvalidArgument("circuit needs at least one qubit".into()));
        }
        Ok(Circuit {
            num_qubits,
            gates: Vec::new(),
        })
    }

    pub fn from_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Circuit::new(num_qubits)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn one_qubit(&mut self, target: usize, unitary: Mat2) -> Result<()> {
        self.push(Gate::OneQubit { unitary, target })
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.push(Gate::Cnot { control, target })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_cnot()).count()
    }

    pub fn one_qubit_count(&self) -> usize {
        self.gates.len() - self.cnot_count()
    }

    /// Reversed circuit with every gate conjugate-transposed.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// Appends all gates of `other` (same width).
    pub fn extend_from(&mut self, other: &Circuit) -> Result<()> {
        if other.num_qubits != self.num_qubits {
            return Err(QvError::QubitMismatch {
                expected: self.num_qubits,
                got: other.num_qubits,
            });
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    pub(crate) fn from_parts_unchecked(num_qubits: usize, gates: Vec<Gate>) -> Circuit {
        Circuit { num_qubits, gates }
    }

    /// Applies the circuit to a statevector in place.
    pub fn apply_to(&self, amps: &mut [C64]) {
        debug_assert_eq!(amps.len(), 1 << self.num_qubits);
        for g in &self.gates {
            match g {
                Gate::OneQubit { unitary, target } => linalg::apply_one_qubit(amps, *target, unitary),
                Gate::Cnot { control, target } => linalg::apply_cnot(amps, *control, *target),
            }
        }
    }
}

/// Dense unitary of a circuit, built column by column.
pub fn circuit_unitary(c: &Circuit) -> Result<DMatrix<C64>> {
    let m = c.num_qubits();
    if m > MAX_DENSE_UNITARY_QUBITS {
        return Err(QvError::TooManyQubits {
            what: "circuit_unitary",
            max: MAX_DENSE_UNITARY_QUBITS,
            got: m,
        });
    }
    let dim = 1usize << m;
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for mut col in u.column_iter_mut() {
        c.apply_to(col.as_mut_slice());
    }
    Ok(u)
}

/// One layer of a quantum volume circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct QvLayer {
    /// Qubit labels in permuted order; block `k` acts on
    /// `(permutation[2k], permutation[2k + 1])`.
    pub permutation: Vec<usize>,
    pub blocks: Vec<Mat4>,
}

impl QvLayer {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.permutation
            .chunks_exact(2)
            .map(|p| (p[0], p[1]))
            .take(self.blocks.len())
    }
}

/// Abstract quantum volume circuit: permutation layers with Haar SU(4) blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct QvModelCircuit {
    pub num_qubits: usize,
    pub depth: usize,
    pub layers: Vec<QvLayer>,
    pub seed: u64,
}

impl QvModelCircuit {
    pub fn block_count(&self) -> usize {
        self.layers.iter().map(|l| l.blocks.len()).sum()
    }

    /// Applies the undecomposed blocks to a statevector.
    pub fn apply_to(&self, amps: &mut [C64]) {
        for layer in &self.layers {
            for ((a, b), block) in layer.pairs().zip(&layer.blocks) {
                linalg::apply_two_qubit(amps, a, b, block);
            }
        }
    }

    pub fn unitary(&self) -> Result<DMatrix<C64>> {
        if self.num_qubits > MAX_DENSE_UNITARY_QUBITS {
            return Err(QvError::TooManyQubits {
                what: "QvModelCircuit::unitary",
                max: MAX_DENSE_UNITARY_QUBITS,
                got: self.num_qubits,
            });
        }
        let dim = 1usize << self.num_qubits;
        let mut u = DMatrix::<C64>::identity(dim, dim);
        for mut col in u.column_iter_mut() {
            self.apply_to(col.as_mut_slice());
        }
        Ok(u)
    }
}

/// Haar-random `n×n` unitary: QR of a complex Ginibre matrix with the
/// diagonal of R made real positive.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = DMatrix::<C64>::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random SU(4) element.
pub fn haar_su4<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    let u = haar_unitary(4, rng);
    let mut m = Mat4::from_fn(|r, c| u[(r, c)]);
    let det = m.determinant();
    let root = C64::from_polar(1.0, -det.arg() / 4.0);
    m *= root;
    m
}

/// Generates the quantum volume model circuit for width `m`; fully determined
/// by `(m, seed)`.
pub fn generate_qv_circuit(m: usize, seed: u64) -> Result<QvModelCircuit> {
    if m < 2 {
        return Err(QvError::TooFewQubits(m));
    }
    let mut rng = tagged_rng(seed, Stream::Circuit);
    let layers = (0..m)
        .map(|_| {
            let mut permutation: Vec<usize> = (0..m).collect();
            permutation.shuffle(&mut rng);
            let blocks = (0..m / 2).map(|_| haar_su4(&mut rng)).collect();
            QvLayer { permutation, blocks }
        })
        .collect();
    Ok(QvModelCircuit {
        num_qubits: m,
        depth: m,
        layers,
        seed,
    })
}

// ---------------------------------------------------------------------------
// JSON document form

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDocument {
    pub kind: String,
    pub targets: Vec<usize>,
    /// Row-major `[re, im]` pairs; absent for CNOT.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitDocument {
    pub num_qubits: usize,
    pub gates: Vec<GateDocument>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub provenance: Option<String>,
}

impl CircuitDocument {
    pub fn from_circuit(c: &Circuit, seed: Option<u64>, provenance: Option<String>) -> Self {
        let gates = c
            .gates()
            .iter()
            .map(|g| match g {
                Gate::OneQubit { unitary, target } => GateDocument {
                    kind: "u".into(),
                    targets: vec![*target],
                    matrix: Some(
                        [(0, 0), (0, 1), (1, 0), (1, 1)]
                            .iter()
                            .map(|&ix| [unitary[ix].re, unitary[ix].im])
                            .collect(),
                    ),
                },
                Gate::Cnot { control, target } => GateDocument {
                    kind: "cx".into(),
                    targets: vec![*control, *target],
                    matrix: None,
                },
            })
            .collect();
        CircuitDocument {
            num_qubits: c.num_qubits(),
            gates,
            seed,
            provenance,
        }
    }

    pub fn to_circuit(&self) -> Result<Circuit> {
        let mut c = Circuit::new(self.num_qubits)?;
        for (i, g) in self.gates.iter().enumerate() {
            let path = format!("gates[{i}]");
            let gate = match (g.kind.as_str(), g.targets.as_slice()) {
                ("u", &[target]) => {
                    let m = g
                        .matrix
                        .as_ref()
                        .ok_or_else(|| QvError::schema(format!("{path}.matrix"), "missing"))?;
                    if m.len() != 4 {
                        return Err(QvError::schema(
                            format!("{path}.matrix"),
                            format!("expected 4 entries, got {}", m.len()),
                        ));
                    }
                    let e = |k: usize| C64::new(m[k][0], m[k][1]);
                    Gate::OneQubit {
                        unitary: Mat2::new(e(0), e(1), e(2), e(3)),
                        target,
                    }
                }
                ("cx", &[control, target]) => Gate::Cnot { control, target },
                (kind, t) => {
                    return Err(QvError::schema(
                        path,
                        format!("unsupported gate kind {kind:?} with {} targets", t.len()),
                    ))
                }
            };
            c.push(gate)
                .map_err(|e| QvError::schema(format!("gates[{i}]"), e.to_string()))?;
        }
        Ok(c)
    }
}

/// Identity-free helper for tests and callers building states by hand.
pub fn basis_state(num_qubits: usize, index: usize) -> Vec<C64> {
    let mut v = vec![ZERO; 1 << num_qubits];
    v[index] = ONE;
    v
}
