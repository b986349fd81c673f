//! Channel map for one leg of the round trip: Eve's simulated attack rotation,
//! stochastic Pauli imperfections, baseline misalignment and detector noise.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};
use crate::quantum::{apply_unitary, Bit, StateVector, Unitary2};

/// Basis left undisturbed by Eve's interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    Z,
    X,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::Z => "z",
            Axis::X => "x",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Leg {
    Forward,
    Backward,
}

/// Eve's attack: axis (or none) and the ancilla-overlap angle on each leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub axis: Option<Axis>,
    pub phi_forward: f64,
    pub phi_backward: f64,
}

impl AttackSpec {
    pub const NONE: AttackSpec = AttackSpec {
        axis: None,
        phi_forward: 0.0,
        phi_backward: 0.0,
    };

    /// Angles outside `[0, pi/2]` are clamped into range.
    pub fn new(axis: Option<Axis>, phi_forward: f64, phi_backward: f64) -> Self {
        Self {
            axis,
            phi_forward: clamp_angle(phi_forward),
            phi_backward: clamp_angle(phi_backward),
        }
    }

    /// Same axis and angle on both legs.
    pub fn symmetric(axis: Axis, phi: f64) -> Self {
        Self::new(Some(axis), phi, phi)
    }

    pub fn phi(&self, leg: Leg) -> f64 {
        match leg {
            Leg::Forward => self.phi_forward,
            Leg::Backward => self.phi_backward,
        }
    }

    pub fn with_axis(self, axis: Axis) -> Self {
        Self {
            axis: Some(axis),
            ..self
        }
    }
}

impl Default for AttackSpec {
    fn default() -> Self {
        Self::NONE
    }
}

fn clamp_angle(phi: f64) -> f64 {
    if phi.is_nan() {
        0.0
    } else {
        phi.clamp(0.0, FRAC_PI_2)
    }
}

/// Which detections see the background noise `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ReadoutScope {
    /// Only Bob's round-trip detection in encoding-mode rounds.
    #[default]
    Encoding,
    /// Every detection: Alice's control measurement and all of Bob's.
    All,
}

impl ReadoutScope {
    pub fn label(self) -> &'static str {
        match self {
            ReadoutScope::Encoding => "encoding",
            ReadoutScope::All => "all",
        }
    }
}

impl FromStr for ReadoutScope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "encoding" => Ok(ReadoutScope::Encoding),
            "all" => Ok(ReadoutScope::All),
            other => Err(format!("unknown readout scope `{other}` (expected encoding|all)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    pub attack: AttackSpec,
    /// Probability of a stray X and, independently, of a stray Y, is
    /// `delta / 2` each per leg.
    pub delta: f64,
    /// Background detection noise: a reading is replaced by a fair coin with
    /// probability `xi`.
    pub xi: f64,
    pub baseline_flip_forward: f64,
    pub baseline_flip_backward: f64,
    pub readout: ReadoutScope,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn with_attack(attack: AttackSpec) -> Self {
        Self {
            attack,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_range("noise.delta", self.delta, 0.0, 1.0, "[0, 1]")?;
        check_range("noise.xi", self.xi, 0.0, 1.0, "[0, 1]")?;
        check_range(
            "noise.baseline_flip_forward",
            self.baseline_flip_forward,
            0.0,
            0.5,
            "[0, 0.5]",
        )?;
        check_range(
            "noise.baseline_flip_backward",
            self.baseline_flip_backward,
            0.0,
            0.5,
            "[0, 0.5]",
        )?;
        check_range(
            "noise.phi_forward",
            self.attack.phi_forward,
            0.0,
            FRAC_PI_2,
            "[0, pi/2]",
        )?;
        check_range(
            "noise.phi_backward",
            self.attack.phi_backward,
            0.0,
            FRAC_PI_2,
            "[0, pi/2]",
        )?;
        Ok(())
    }

    pub fn baseline_flip(&self, leg: Leg) -> f64 {
        match leg {
            Leg::Forward => self.baseline_flip_forward,
            Leg::Backward => self.baseline_flip_backward,
        }
    }
}

/// `cos(phi/2) I + i sin(phi/2) P`, with `P` the Pauli operator of `axis`.
///
/// `phi` is the ancilla-overlap angle; the half angle makes conjugate-basis
/// eigenstates flip with probability `(1 - cos phi) / 2`.
pub fn attack_unitary(axis: Axis, phi: f64) -> Result<Unitary2> {
    check_range("phi", phi, 0.0, FRAC_PI_2, "[0, pi/2]")?;
    let (s, c) = (phi / 2.0).sin_cos();
    let cc = Complex64::new(c, 0.0);
    let is = Complex64::new(0.0, s);
    let zero = Complex64::new(0.0, 0.0);
    let m = match axis {
        Axis::Z => [[cc + is, zero], [zero, cc - is]],
        Axis::X => [[cc, is], [is, cc]],
    };
    Unitary2::new(m)
}

/// Prebuilt operators for one noise model, so the round loop does not
/// rebuild the attack unitaries.
#[derive(Debug, Clone)]
pub struct Channel {
    model: NoiseModel,
    attack: [Option<Unitary2>; 2],
    x: Unitary2,
    y: Unitary2,
}

impl Channel {
    pub fn new(model: NoiseModel) -> Result<Self> {
        model.validate()?;
        let build = |leg| match model.attack.axis {
            Some(axis) => attack_unitary(axis, model.attack.phi(leg)).map(Some),
            None => Ok(None),
        };
        Ok(Self {
            attack: [build(Leg::Forward)?, build(Leg::Backward)?],
            model,
            x: Unitary2::pauli_x(),
            y: Unitary2::pauli_y(),
        })
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    /// Applies the leg in a fixed order: attack rotation, the two `delta/2`
    /// Pauli kicks (X then Y), then the baseline flip. The baseline flip is
    /// `iY`, which flips eigenstates of both bases. Always consumes
    /// three uniforms so the stream layout does not depend on parameters.
    pub fn apply_leg<R: Rng + ?Sized>(&self, s: &StateVector, leg: Leg, rng: &mut R) -> StateVector {
        let mut out = *s;
        let idx = match leg {
            Leg::Forward => 0,
            Leg::Backward => 1,
        };
        if let Some(u) = &self.attack[idx] {
            out = apply_unitary(u, &out);
        }
        let kick = self.model.delta / 2.0;
        let kx: f64 = rng.random();
        let ky: f64 = rng.random();
        let kb: f64 = rng.random();
        if kx < kick {
            out = apply_unitary(&self.x, &out);
        }
        if ky < kick {
            out = apply_unitary(&self.y, &out);
        }
        if kb < self.model.baseline_flip(leg) {
            out = apply_unitary(&self.y, &out);
        }
        out
    }
}

/// One-off form of [`Channel::apply_leg`].
pub fn apply_leg<R: Rng + ?Sized>(s: &StateVector, model: &NoiseModel, leg: Leg, rng: &mut R) -> Result<StateVector> {
    Ok(Channel::new(*model)?.apply_leg(s, leg, rng))
}

/// With probability `xi` the recorded bit is a fair coin, otherwise `true_bit`.
pub fn detector_readout<R: Rng + ?Sized>(true_bit: Bit, xi: f64, rng: &mut R) -> Bit {
    let u: f64 = rng.random();
    let coin = Bit::from_bool(rng.random::<bool>());
    if u < xi {
        coin
    } else {
        true_bit
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "z" | "Z" => Ok(Axis::Z),
            "x" | "X" => Ok(Axis::X),
            other => Err(format!("unknown attack axis `{other}`")),
        }
    }
}
