//! Simulator and analytic toolkit for the LM05 two-way deterministic quantum
//! key distribution protocol under individual incoherent eavesdropping.
//!
//! * [`quantum`]: single-qubit state algebra and projective measurement.
//! * [`channel`]: per-leg channel map (attack rotation, Pauli imperfections,
//!   misalignment) and detector noise.
//! * [`protocol`]: the round state machine, transcripts and QBER estimation.
//! * [`eavesdrop`]: closed-form attack predictions and the ancilla-level
//!   Monte Carlo oracle.
//! * [`infosec`]: mutual-information curves and the security threshold.
//! * [`experiments`]: configuration, sweeps, the imperfection band and
//!   table output used by the `lm05` command-line tool.

pub mod channel;
pub mod eavesdrop;
pub mod error;
pub mod experiments;
pub mod infosec;
pub mod protocol;
pub mod quantum;

use rand::SeedableRng;

pub use channel::{attack_unitary, detector_readout, AttackSpec, Axis, Channel, Leg, NoiseModel, ReadoutScope};
pub use eavesdrop::{
    attack_interaction, compose_qbe, eve_error_rate, eve_oracle, eve_oracle_in_basis, qber_from_angle, AncillaPair,
    EvePrediction,
};
pub use error::{Error, Result};
pub use infosec::{binary_entropy, find_threshold, info_curves, info_from_report, Averaging, InfoReport, Threshold};
pub use protocol::{
    compose_qab, run_and_estimate, run_round, run_session, sift_and_estimate, Mode, QberReport, Rate, RoundRecord,
    SessionConfig, SessionLog,
};
pub use quantum::{
    apply_unitary, measure, outcome_probability, prepare, Basis, Bit, JointState, StateVector, Unitary2,
};

/// Random stream used everywhere in the simulator. ChaCha keeps outputs
/// identical across platforms and crate versions for a given seed.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
