//! Exact single-qubit state algebra.
//!
//! Pure states are kept as two complex amplitudes in the computational
//! basis. Global phase is never tracked as meaningful: two states are the
//! same when `|<a|b>| = 1`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking normalization and phase-free equality.
pub const STATE_TOL: f64 = 1e-9;
/// Largest `U†U - I` entry accepted by [`Unitary2::new`].
pub const UNITARY_TOL: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Z, Basis::X];

    pub fn from_bool(x: bool) -> Self {
        if x {
            Basis::X
        } else {
            Basis::Z
        }
    }

    pub fn index(self) -> usize {
        match self {
            Basis::Z => 0,
            Basis::X => 1,
        }
    }

    pub fn conjugate(self) -> Self {
        match self {
            Basis::Z => Basis::X,
            Basis::X => Basis::Z,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Basis::Z => "Z",
            Basis::X => "X",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub const ALL: [Bit; 2] = [Bit::Zero, Bit::One];

    pub fn from_bool(x: bool) -> Self {
        if x {
            Bit::One
        } else {
            Bit::Zero
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn flip(self) -> Self {
        match self {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
        }
    }

    pub fn xor(self, other: Bit) -> Bit {
        Bit::from_bool(self != other)
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Pure single-qubit state `a0|0> + a1|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    a0: Complex64,
    a1: Complex64,
}

impl StateVector {
    /// Builds a state from raw amplitudes, normalizing them.
    ///
    /// Fails when both amplitudes vanish.
    pub fn new(a0: Complex64, a1: Complex64) -> Result<Self> {
        let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Domain {
                name: "state norm",
                value: norm,
                range: "(0, inf)",
            });
        }
        Ok(Self {
            a0: a0 / norm,
            a1: a1 / norm,
        })
    }

    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        (self.a0, self.a1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.a0.conj() * other.a0 + self.a1.conj() * other.a1
    }

    /// Phase-insensitive equality: `|<self|other>| = 1` within [`STATE_TOL`].
    pub fn same_ray(&self, other: &StateVector) -> bool {
        (self.inner(other).norm() - 1.0).abs() < STATE_TOL
    }

    fn renormalized(a0: Complex64, a1: Complex64) -> Self {
        let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        Self {
            a0: a0 / norm,
            a1: a1 / norm,
        }
    }
}

/// Eigenstate of `basis` with eigen-label `bit`: `|0>`, `|1>`, `|+>` or `|->`.
pub fn prepare(basis: Basis, bit: Bit) -> StateVector {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let (a0, a1) = match (basis, bit) {
        (Basis::Z, Bit::Zero) => (ONE, ZERO),
        (Basis::Z, Bit::One) => (ZERO, ONE),
        (Basis::X, Bit::Zero) => (h, h),
        (Basis::X, Bit::One) => (h, -h),
    };
    StateVector { a0, a1 }
}

/// A 2x2 unitary, validated on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: [[Complex64; 2]; 2],
}

impl Unitary2 {
    /// Rejects matrices whose `U†U` deviates from the identity by more than
    /// [`UNITARY_TOL`] in any entry.
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let u = Self { m };
        let r = u.unitarity_residual();
        if r.is_finite() && r <= UNITARY_TOL {
            Ok(u)
        } else {
            Err(Error::NonUnitary(r))
        }
    }

    pub fn identity() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub fn pauli_x() -> Self {
        Self {
            m: [[ZERO, ONE], [ONE, ZERO]],
        }
    }

    pub fn pauli_y() -> Self {
        Self {
            m: [[ZERO, -I], [I, ZERO]],
        }
    }

    pub fn pauli_z() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    /// `iY = ZX`, the bit-flip encoding operation.
    pub fn i_y() -> Self {
        Self::pauli_z() * Self::pauli_x()
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        let m = self.m;
        Self {
            m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]],
        }
    }

    /// Largest entry-wise modulus of `U†U - I`.
    pub fn unitarity_residual(&self) -> f64 {
        let p = mat_mul(&self.adjoint().m, &self.m);
        let mut worst: f64 = 0.0;
        for (i, row) in p.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((v - target).norm());
            }
        }
        worst
    }
}

fn mat_mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Unitary2) -> Unitary2 {
        Unitary2 {
            m: mat_mul(&self.m, &rhs.m),
        }
    }
}

pub fn apply_unitary(u: &Unitary2, s: &StateVector) -> StateVector {
    let m = &u.m;
    StateVector::renormalized(m[0][0] * s.a0 + m[0][1] * s.a1, m[1][0] * s.a0 + m[1][1] * s.a1)
}

/// Born probability of reading `bit` when measuring `s` in `basis`.
pub fn outcome_probability(s: &StateVector, basis: Basis, bit: Bit) -> f64 {
    let p = s.inner(&prepare(basis, bit)).norm_sqr();
    p.clamp(0.0, 1.0)
}

/// Projective measurement; returns the outcome and the collapsed eigenstate.
pub fn measure<R: Rng + ?Sized>(s: &StateVector, basis: Basis, rng: &mut R) -> (Bit, StateVector) {
    let p0 = outcome_probability(s, basis, Bit::Zero);
    let u: f64 = rng.random();
    let bit = if u < p0 { Bit::Zero } else { Bit::One };
    (bit, prepare(basis, bit))
}

/// Pure state of a qubit and a two-level ancilla, amplitudes ordered
/// `|q,a>` = `|00>, |01>, |10>, |11>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    amps: [Complex64; 4],
}

impl JointState {
    pub fn new(amps: [Complex64; 4]) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Domain {
                name: "joint state norm",
                value: norm,
                range: "(0, inf)",
            });
        }
        Ok(Self {
            amps: amps.map(|a| a / norm),
        })
    }

    /// `qubit ⊗ ancilla`
    pub fn product(qubit: &StateVector, ancilla: &StateVector) -> Self {
        let (q0, q1) = qubit.amplitudes();
        let (e0, e1) = ancilla.amplitudes();
        Self {
            amps: [q0 * e0, q0 * e1, q1 * e0, q1 * e1],
        }
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Unnormalized ancilla vector left after projecting the qubit on `q`:
    /// `(<q| ⊗ 1)|psi>`.
    fn ancilla_given_qubit(&self, q: &StateVector) -> [Complex64; 2] {
        let (q0, q1) = q.amplitudes();
        [
            q0.conj() * self.amps[0] + q1.conj() * self.amps[2],
            q0.conj() * self.amps[1] + q1.conj() * self.amps[3],
        ]
    }

    /// Unnormalized qubit vector left after projecting the ancilla on `a`.
    fn qubit_given_ancilla(&self, a: &StateVector) -> [Complex64; 2] {
        let (e0, e1) = a.amplitudes();
        [
            e0.conj() * self.amps[0] + e1.conj() * self.amps[1],
            e0.conj() * self.amps[2] + e1.conj() * self.amps[3],
        ]
    }

    /// Marginal Born probability for a qubit measurement in `basis`.
    pub fn qubit_outcome_probability(&self, basis: Basis, bit: Bit) -> f64 {
        let v = self.ancilla_given_qubit(&prepare(basis, bit));
        (v[0].norm_sqr() + v[1].norm_sqr()).clamp(0.0, 1.0)
    }

    /// Marginal probability that the ancilla is found in `a`.
    pub fn ancilla_outcome_probability(&self, a: &StateVector) -> f64 {
        let v = self.qubit_given_ancilla(a);
        (v[0].norm_sqr() + v[1].norm_sqr()).clamp(0.0, 1.0)
    }

    /// Measures the ancilla in the orthonormal basis `{outcomes[0], outcomes[1]}`
    /// and returns the outcome with the qubit's conditional state.
    pub fn measure_ancilla<R: Rng + ?Sized>(&self, outcomes: &[StateVector; 2], rng: &mut R) -> (Bit, StateVector) {
        let p0 = self.ancilla_outcome_probability(&outcomes[0]);
        let u: f64 = rng.random();
        let bit = if u < p0 { Bit::Zero } else { Bit::One };
        let v = self.qubit_given_ancilla(&outcomes[bit.index()]);
        (bit, StateVector::renormalized(v[0], v[1]))
    }
}
