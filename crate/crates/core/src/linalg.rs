//! Small dense complex linear algebra used by the circuit and simulation code.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn pauli_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

pub fn hadamard() -> Mat2 {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Mat2::new(h, h, h, -h)
}

/// `exp(-i θ Z / 2)`
pub fn rz(theta: f64) -> Mat2 {
    Mat2::new(
        C64::from_polar(1.0, -theta / 2.0),
        ZERO,
        ZERO,
        C64::from_polar(1.0, theta / 2.0),
    )
}

/// `exp(-i θ Y / 2)`
pub fn ry(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    Mat2::new(C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0))
}

/// Tensor product `a ⊗ b`; `a` acts on the more significant index.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// CNOT in the two-qubit block basis `2*bit_first + bit_second`,
/// with the first qubit as control.
pub fn cnot_first_controls() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

/// CNOT with the second qubit of the block as control.
pub fn cnot_second_controls() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 3)] = ONE;
    m[(2, 2)] = ONE;
    m[(3, 1)] = ONE;
    m
}

/// Max-abs entry of `U†U - I`.
pub fn unitarity_defect<R, C, S>(m: &nalgebra::Matrix<C64, R, C, S>) -> f64
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::storage::Storage<C64, R, C>,
{
    let n = m.ncols();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = ZERO;
            for k in 0..m.nrows() {
                acc += m[(k, i)].conj() * m[(k, j)];
            }
            if i == j {
                acc -= ONE;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

/// Max-abs distance between `a` and `b` after removing global phase.
///
/// The phase is fixed by aligning the largest-magnitude entry of `b`.
pub fn phase_aligned_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (k, _) = b.iter().enumerate().fold(
        (0, -1.0),
        |(bk, bv), (k, v)| {
            if v.norm() > bv {
                (k, v.norm())
            } else {
                (bk, bv)
            }
        },
    );
    let phase = if a[k].norm() > 0.0 && b[k].norm() > 0.0 {
        let r = a[k] / b[k];
        r / r.norm()
    } else {
        ONE
    };
    a.iter().zip(b).map(|(x, y)| (x - phase * y).norm()).fold(0.0, f64::max)
}

pub fn phase_aligned_distance_mat4(a: &Mat4, b: &Mat4) -> f64 {
    phase_aligned_distance(a.as_slice(), b.as_slice())
}

pub fn phase_aligned_distance_dense(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    phase_aligned_distance(a.as_slice(), b.as_slice())
}

/// Applies a 2×2 unitary to qubit `q` of a statevector (bit `q` of the index).
pub fn apply_one_qubit(amps: &mut [C64], q: usize, u: &Mat2) {
    let bit = 1usize << q;
    let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    for i in 0..amps.len() {
        if i & bit == 0 {
            let j = i | bit;
            let (a0, a1) = (amps[i], amps[j]);
            amps[i] = u00 * a0 + u01 * a1;
            amps[j] = u10 * a0 + u11 * a1;
        }
    }
}

/// Applies a 4×4 unitary to the ordered pair `(first, second)`.
pub fn apply_two_qubit(amps: &mut [C64], first: usize, second: usize, u: &Mat4) {
    let (bf, bs) = (1usize << first, 1usize << second);
    let mut local = [ZERO; 4];
    for i in 0..amps.len() {
        if i & (bf | bs) != 0 {
            continue;
        }
        let idx = [i, i | bs, i | bf, i | bf | bs];
        for (k, &ix) in idx.iter().enumerate() {
            local[k] = amps[ix];
        }
        for (r, &ix) in idx.iter().enumerate() {
            let mut acc = ZERO;
            for (c, v) in local.iter().enumerate() {
                acc += u[(r, c)] * v;
            }
            amps[ix] = acc;
        }
    }
}

pub fn apply_cnot(amps: &mut [C64], control: usize, target: usize) {
    let (bc, bt) = (1usize << control, 1usize << target);
    for i in 0..amps.len() {
        if i & bc != 0 && i & bt == 0 {
            amps.swap(i, i | bt);
        }
    }
}
