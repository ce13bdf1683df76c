//! Dense statevector simulation of an n-qubit register.
//!
//! Qubit 0 is the most significant bit of the amplitude index, so for a
//! 3-qubit register the basis state `|q0 q1 q2>` lives at index
//! `q0 * 4 + q1 * 2 + q2`. Rotations use the half-angle convention
//! `R_a(t) = exp(-i t sigma_a / 2)`.
//!
//! Gates act in place on strided amplitude pairs; no gate ever builds a
//! full `2^n x 2^n` matrix.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{check_finite, Error, Result};

/// Largest register `zero_state` accepts.
pub const MAX_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RotationAxis {
    X,
    Y,
    Z,
}

impl RotationAxis {
    pub const ALL: [RotationAxis; 3] = [RotationAxis::X, RotationAxis::Y, RotationAxis::Z];

    pub fn as_str(self) -> &'static str {
        match self {
            RotationAxis::X => "x",
            RotationAxis::Y => "y",
            RotationAxis::Z => "z",
        }
    }
}

impl fmt::Display for RotationAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RotationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(RotationAxis::X),
            "y" => Ok(RotationAxis::Y),
            "z" => Ok(RotationAxis::Z),
            other => Err(Error::Config(format!("unknown rotation axis `{other}`"))),
        }
    }
}

/// A single gate of the supported set {RX, RY, RZ, CNOT}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateOp {
    Rotation {
        axis: RotationAxis,
        target: usize,
        angle: f64,
    },
    CNot {
        control: usize,
        target: usize,
    },
}

impl GateOp {
    /// The inverse gate. CNOT is self-inverse; rotations negate the angle.
    pub fn inverse(self) -> Self {
        match self {
            GateOp::Rotation {
                axis,
                target,
                angle,
            } => GateOp::Rotation {
                axis,
                target,
                angle: -angle,
            },
            cnot @ GateOp::CNot { .. } => cnot,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::ResourceLimit(n_qubits));
        }
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two; the vector
    /// is not renormalised.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Shape {
                context: "statevector length (power of two)",
                expected: len.next_power_of_two().max(2),
                found: len,
            });
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::ResourceLimit(n_qubits));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Bit mask selecting `qubit` in an amplitude index.
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, index: usize) -> Result<()> {
        if index < self.n_qubits {
            Ok(())
        } else {
            Err(Error::QubitOutOfRange {
                index,
                n_qubits: self.n_qubits,
            })
        }
    }

    pub fn apply_rotation(&mut self, axis: RotationAxis, target: usize, angle: f64) -> Result<()> {
        self.check_qubit(target)?;
        check_finite("rotation angle", angle)?;
        self.rotate(axis, target, angle);
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::SameQubit(control));
        }
        self.cnot(control, target);
        Ok(())
    }

    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        match *gate {
            GateOp::Rotation {
                axis,
                target,
                angle,
            } => self.apply_rotation(axis, target, angle),
            GateOp::CNot { control, target } => self.apply_cnot(control, target),
        }
    }

    /// `<Z>` on one qubit.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = self.mask(qubit);
        let value = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i & mask == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum::<f64>();
        Ok(value.clamp(-1.0, 1.0))
    }

    /// `<Z>` for each of the first `k` qubits in a single sweep.
    pub fn expectations_z(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: k.saturating_sub(1),
                n_qubits: self.n_qubits,
            });
        }
        let shifts: Vec<usize> = (0..k).map(|q| self.n_qubits - 1 - q).collect();
        let mut out = vec![0.0; k];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            for (o, &s) in out.iter_mut().zip(&shifts) {
                if (i >> s) & 1 == 0 {
                    *o += p;
                } else {
                    *o -= p;
                }
            }
        }
        Ok(out.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect())
    }

    // Unchecked kernels. Callers validate indices and angles.

    pub(crate) fn rotate(&mut self, axis: RotationAxis, target: usize, angle: f64) {
        match axis {
            RotationAxis::Z => {
                let (s, c) = (angle / 2.0).sin_cos();
                self.apply_diag(target, Complex64::new(c, -s), Complex64::new(c, s));
            }
            _ => self.apply_matrix(target, &rotation_matrix(axis, angle)),
        }
    }

    /// Applies an arbitrary 2x2 matrix to `target`.
    pub(crate) fn apply_matrix(&mut self, target: usize, m: &Mat2) {
        let stride = self.mask(target);
        for block in self.amplitudes.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = m[0][0] * x0 + m[0][1] * x1;
                *a1 = m[1][0] * x0 + m[1][1] * x1;
            }
        }
    }

    fn apply_diag(&mut self, target: usize, d0: Complex64, d1: Complex64) {
        let stride = self.mask(target);
        for block in self.amplitudes.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            lo.iter_mut().for_each(|a| *a *= d0);
            hi.iter_mut().for_each(|a| *a *= d1);
        }
    }

    pub(crate) fn cnot(&mut self, control: usize, target: usize) {
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        let (low, high) = (cmask.min(tmask), cmask.max(tmask));
        // Enumerate indices with both bits clear, then set the control bit.
        for k in 0..self.amplitudes.len() >> 2 {
            let i = insert_zero_bit(insert_zero_bit(k, low), high) | cmask;
            self.amplitudes.swap(i, i | tmask);
        }
    }

    /// `C[a][b] = sum conj(other_a) self_b` over the amplitude pairs of
    /// `qubit`, so that `<other| O |self> = sum_ab O[a][b] C[a][b]` for any
    /// single-qubit operator `O`.
    pub(crate) fn pair_correlation(&self, other: &StateVector, qubit: usize) -> Mat2 {
        let stride = self.mask(qubit);
        let mut c = [[ZERO; 2]; 2];
        let blocks = self
            .amplitudes
            .chunks_exact(stride << 1)
            .zip(other.amplitudes.chunks_exact(stride << 1));
        for (psi, lam) in blocks {
            let (psi0, psi1) = psi.split_at(stride);
            let (lam0, lam1) = lam.split_at(stride);
            for j in 0..stride {
                let (p0, p1) = (psi0[j], psi1[j]);
                let (l0, l1) = (lam0[j].conj(), lam1[j].conj());
                c[0][0] += l0 * p0;
                c[0][1] += l0 * p1;
                c[1][0] += l1 * p0;
                c[1][1] += l1 * p1;
            }
        }
        c
    }

    /// Returns `H|self>` for the diagonal observable `H = sum_c weights[c] Z_c`
    /// over the first `weights.len()` qubits.
    pub(crate) fn weighted_z_image(&self, weights: &[f64]) -> StateVector {
        let shifts: Vec<usize> = (0..weights.len())
            .map(|q| self.n_qubits - 1 - q)
            .collect();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let eigen: f64 = weights
                    .iter()
                    .zip(&shifts)
                    .map(|(w, &s)| if (i >> s) & 1 == 0 { *w } else { -*w })
                    .sum();
                a * eigen
            })
            .collect();
        StateVector {
            n_qubits: self.n_qubits,
            amplitudes,
        }
    }
}

/// Row-major 2x2 complex matrix.
pub type Mat2 = [[Complex64; 2]; 2];

/// `exp(-i angle sigma_axis / 2)`.
pub fn rotation_matrix(axis: RotationAxis, angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    match axis {
        RotationAxis::X => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        RotationAxis::Y => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        RotationAxis::Z => [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]],
    }
}

pub fn pauli(axis: RotationAxis) -> Mat2 {
    let i = Complex64::i();
    match axis {
        RotationAxis::X => [[ZERO, ONE], [ONE, ZERO]],
        RotationAxis::Y => [[ZERO, -i], [i, ZERO]],
        RotationAxis::Z => [[ONE, ZERO], [ZERO, -ONE]],
    }
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub fn dagger(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// `sum_ab op[a][b] corr[a][b]`.
pub(crate) fn operator_overlap(op: &Mat2, corr: &Mat2) -> Complex64 {
    op[0][0] * corr[0][0] + op[0][1] * corr[0][1] + op[1][0] * corr[1][0] + op[1][1] * corr[1][1]
}

/// Spreads the bits of `k` at and above `pos` up by one, leaving a zero at `pos`.
fn insert_zero_bit(k: usize, pos_mask: usize) -> usize {
    let low = k & (pos_mask - 1);
    ((k ^ low) << 1) | low
}
