//! Individual incoherent attack: closed-form predictions and a Monte Carlo
//! oracle that runs the actual ancilla interactions.
//!
//! In a Z-attack Eve's ancilla is rotated conditionally on the qubit's
//! Z value, so Z eigenstates pass untouched while X eigenstates pick up the
//! disturbance; the X-attack is the same construction in the X basis. With
//! ancilla overlap `cos(phi)` the conjugate-basis flip rate is
//! `(1 - cos phi) / 2`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::channel::{AttackSpec, Axis};
use crate::error::{check_range, Result};
use crate::protocol::{compose_qab, Rate};
use crate::quantum::{apply_unitary, prepare, Basis, Bit, JointState, StateVector, Unitary2};
use crate::rng_from_seed;

/// Two ancilla states with real overlap `cos(phi)`:
/// `(cos(phi/2), +-sin(phi/2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncillaPair {
    pub phi: f64,
    pub states: [StateVector; 2],
}

impl AncillaPair {
    pub fn new(phi: f64) -> Result<Self> {
        check_range("phi", phi, 0.0, FRAC_PI_2, "[0, pi/2]")?;
        let (s, c) = (phi / 2.0).sin_cos();
        let re = |x: f64| Complex64::new(x, 0.0);
        Ok(Self {
            phi,
            states: [StateVector::new(re(c), re(s))?, StateVector::new(re(c), re(-s))?],
        })
    }

    pub fn overlap(&self) -> Complex64 {
        self.states[0].inner(&self.states[1])
    }

    /// Minimum-error projective measurement for the pair: the symmetric
    /// basis `(1, +-1)/sqrt(2)`, outcome `k` meaning "state `k` was sent".
    pub fn helstrom_basis() -> [StateVector; 2] {
        [prepare(Basis::X, Bit::Zero), prepare(Basis::X, Bit::One)]
    }
}

/// Minimum error `(1 - sin phi) / 2` for telling apart two equiprobable
/// pure states of overlap `cos phi`.
pub fn helstrom_error(phi: f64) -> f64 {
    (1.0 - phi.sin()) / 2.0
}

/// Conjugate-basis QBER induced by an attack at angle `phi`: `(1 - cos phi) / 2`.
pub fn qber_from_angle(phi: f64) -> Result<f64> {
    check_range("phi", phi, 0.0, FRAC_PI_2, "[0, pi/2]")?;
    Ok((1.0 - phi.cos()) / 2.0)
}

/// Eve's error rate on Alice's encoding given the two partial QBERs of the
/// attacked basis: `1/2 - 2 sqrt(q1 q2 (1-q1)(1-q2))`.
pub fn eve_error_rate(q1: f64, q2: f64) -> Result<f64> {
    check_range("q1", q1, 0.0, 0.5, "[0, 0.5]")?;
    check_range("q2", q2, 0.0, 0.5, "[0, 0.5]")?;
    let prod = (q1 * q2 * (1.0 - q1) * (1.0 - q2)).max(0.0);
    Ok(0.5 - 2.0 * prod.sqrt())
}

/// Bob-Eve error rate `Q_AB + Q_AE - 2 Q_AB Q_AE`.
pub fn compose_qbe(q_ab: f64, q_ae: f64) -> f64 {
    compose_qab(q_ab, q_ae)
}

/// Conjugate-basis round-trip QBER conditioned on Alice's encoding:
/// `[sin^2((phi_f + phi_b)/2), sin^2((phi_f - phi_b)/2)]` for `I` and `iY`.
pub fn qab_by_encoding(phi_forward: f64, phi_backward: f64) -> [f64; 2] {
    let sum = ((phi_forward + phi_backward) / 2.0).sin();
    let diff = ((phi_forward - phi_backward) / 2.0).sin();
    [sum * sum, diff * diff]
}

/// Qubit-ancilla interaction of a Z- or X-attack.
///
/// The qubit's component along each eigenstate `|k>` of the attack's
/// invariant basis is tagged with ancilla state `k` of [`AncillaPair`].
pub fn attack_interaction(s: &StateVector, phi: f64, axis: Axis) -> Result<JointState> {
    let pair = AncillaPair::new(phi)?;
    let basis = match axis {
        Axis::Z => Basis::Z,
        Axis::X => Basis::X,
    };
    let mut amps = [Complex64::new(0.0, 0.0); 4];
    for k in Bit::ALL {
        let eigen = prepare(basis, k);
        let coeff = eigen.inner(s);
        let part = JointState::product(&eigen, &pair.states[k.index()]).amplitudes();
        for (a, p) in amps.iter_mut().zip(part) {
            *a += coeff * p;
        }
    }
    JointState::new(amps)
}

/// Monte Carlo estimate of Eve's error on Alice's encoding.
///
/// Each trial picks a random preparation and encoding, runs the forward
/// interaction, measures the forward ancilla at the Helstrom optimum, lets
/// Alice encode on the conditional qubit, runs the backward interaction and
/// measures that ancilla too. Eve's guess is the parity of the two leg
/// guesses. Measuring the forward ancilla early is allowed because it
/// commutes with everything applied later to the qubit and the other ancilla.
pub fn eve_oracle(phi_forward: f64, phi_backward: f64, axis: Axis, trials: u64, seed: u64) -> Result<Rate> {
    eve_oracle_in_basis(phi_forward, phi_backward, axis, None, trials, seed)
}

/// [`eve_oracle`] with Bob's preparation basis pinned to `basis` when given.
pub fn eve_oracle_in_basis(
    phi_forward: f64,
    phi_backward: f64,
    axis: Axis,
    basis: Option<Basis>,
    trials: u64,
    seed: u64,
) -> Result<Rate> {
    // validate once up front; the loop below cannot fail afterwards
    AncillaPair::new(phi_forward)?;
    AncillaPair::new(phi_backward)?;
    let helstrom = AncillaPair::helstrom_basis();
    let flip = Unitary2::i_y();
    let mut rng = rng_from_seed(seed);
    let mut rate = Rate::default();
    for _ in 0..trials {
        let drawn = Basis::from_bool(rng.random());
        let basis = basis.unwrap_or(drawn);
        let bit = Bit::from_bool(rng.random());
        let encoding = Bit::from_bool(rng.random());

        let forward = attack_interaction(&prepare(basis, bit), phi_forward, axis)?;
        let (g1, mut qubit) = forward.measure_ancilla(&helstrom, &mut rng);
        if encoding == Bit::One {
            qubit = apply_unitary(&flip, &qubit);
        }
        let backward = attack_interaction(&qubit, phi_backward, axis)?;
        let (g2, _) = backward.measure_ancilla(&helstrom, &mut rng);

        rate.push(g1.xor(g2) != encoding);
    }
    Ok(rate)
}

/// Closed-form rates for a given attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvePrediction {
    pub q1z: f64,
    pub q1x: f64,
    pub q2z: f64,
    pub q2x: f64,
    pub qab_z: f64,
    pub qab_x: f64,
    pub q_ae: f64,
    pub q_be_z: f64,
    pub q_be_x: f64,
}

impl EvePrediction {
    pub fn for_attack(attack: &AttackSpec) -> Result<Self> {
        let qf = qber_from_angle(attack.phi_forward)?;
        let qb = qber_from_angle(attack.phi_backward)?;
        let ((q1z, q2z), (q1x, q2x)) = match attack.axis {
            None => ((0.0, 0.0), (0.0, 0.0)),
            Some(Axis::Z) => ((0.0, 0.0), (qf, qb)),
            Some(Axis::X) => ((qf, qb), (0.0, 0.0)),
        };
        // Eve learns nothing without an interaction.
        let q_ae = match attack.axis {
            None => 0.5,
            Some(_) => eve_error_rate(qf, qb)?,
        };
        let qab_z = compose_qab(q1z, q2z);
        let qab_x = compose_qab(q1x, q2x);
        Ok(Self {
            q1z,
            q1x,
            q2z,
            q2x,
            qab_z,
            qab_x,
            q_ae,
            q_be_z: compose_qbe(qab_z, q_ae),
            q_be_x: compose_qbe(qab_x, q_ae),
        })
    }

    pub fn qab(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Z => self.qab_z,
            Basis::X => self.qab_x,
        }
    }

    pub fn q_be(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Z => self.q_be_z,
            Basis::X => self.q_be_x,
        }
    }

    /// Round-trip QBER averaged over the four preparations.
    pub fn qab_s(&self) -> f64 {
        (self.qab_z + self.qab_x) / 2.0
    }
}
