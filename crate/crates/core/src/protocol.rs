//! The LM05 round: Bob prepares, the qubit travels to Alice, Alice either
//! measures and re-prepares (control mode) or encodes with `I`/`iY`
//! (encoding mode), and the qubit returns to Bob, who measures in his
//! preparation basis.

use std::fmt;
use std::io::Write;

use rand::Rng;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::channel::{detector_readout, Channel, Leg, NoiseModel, ReadoutScope};
use crate::error::{Error, Result};
use crate::quantum::{apply_unitary, measure, prepare, Basis, Bit, Unitary2};
use crate::rng_from_seed;

/// Strata with fewer events than this are flagged as low confidence.
pub const LOW_CONFIDENCE_EVENTS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SessionConfig {
    pub n_rounds: u64,
    /// Probability that Alice runs control mode.
    pub control_prob: f64,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            n_rounds: 100_000,
            control_prob: 0.5,
            seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn new(n_rounds: u64, control_prob: f64, seed: u64) -> Self {
        Self {
            n_rounds,
            control_prob,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::Invalid("session.rounds must be at least 1".into()));
        }
        if !(self.control_prob > 0.0 && self.control_prob < 1.0) {
            return Err(Error::Domain {
                name: "session.control_prob",
                value: self.control_prob,
                range: "(0, 1)",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    Control,
    Encoding,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Control => "CM",
            Mode::Encoding => "EM",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Transcript of one round. Control rounds carry Alice's basis and outcome
/// and no encoding; encoding rounds the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRecord {
    pub prep_basis: Basis,
    pub prep_bit: Bit,
    pub mode: Mode,
    pub alice_cm_basis: Option<Basis>,
    pub alice_cm_outcome: Option<Bit>,
    pub encoding: Option<Bit>,
    pub bob_outcome: Bit,
}

impl RoundRecord {
    /// Bob's guess of Alice's encoding. Only looks at his own preparation
    /// and outcome.
    pub fn bob_decode(&self) -> Bit {
        self.bob_outcome.xor(self.prep_bit)
    }
}

pub fn run_round<R: Rng + ?Sized>(cfg: &SessionConfig, channel: &Channel, rng: &mut R) -> RoundRecord {
    let noise = channel.model();
    let prep_basis = Basis::from_bool(rng.random());
    let prep_bit = Bit::from_bool(rng.random());
    let mut state = prepare(prep_basis, prep_bit);

    state = channel.apply_leg(&state, Leg::Forward, rng);

    let control = rng.random_bool(cfg.control_prob);
    let (mode, alice_cm_basis, alice_cm_outcome, encoding) = if control {
        let basis = Basis::from_bool(rng.random());
        let (bit, _) = measure(&state, basis, rng);
        let xi = match noise.readout {
            ReadoutScope::All => noise.xi,
            ReadoutScope::Encoding => 0.0,
        };
        let recorded = detector_readout(bit, xi, rng);
        // Alice re-prepares what she recorded.
        state = prepare(basis, recorded);
        (Mode::Control, Some(basis), Some(recorded), None)
    } else {
        let enc = Bit::from_bool(rng.random());
        if enc == Bit::One {
            state = apply_unitary(&Unitary2::i_y(), &state);
        }
        (Mode::Encoding, None, None, Some(enc))
    };

    state = channel.apply_leg(&state, Leg::Backward, rng);

    let (bit, _) = measure(&state, prep_basis, rng);
    let xi = match (noise.readout, mode) {
        (ReadoutScope::All, _) | (ReadoutScope::Encoding, Mode::Encoding) => noise.xi,
        (ReadoutScope::Encoding, Mode::Control) => 0.0,
    };
    let bob_outcome = detector_readout(bit, xi, rng);

    RoundRecord {
        prep_basis,
        prep_bit,
        mode,
        alice_cm_basis,
        alice_cm_outcome,
        encoding,
        bob_outcome,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub config: SessionConfig,
    pub rounds: Vec<RoundRecord>,
}

impl SessionLog {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// One row per round. Absent fields are written as empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record([
            "round",
            "prep_basis",
            "prep_bit",
            "mode",
            "alice_basis",
            "alice_outcome",
            "encoding",
            "bob_outcome",
        ])?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for (i, r) in self.rounds.iter().enumerate() {
            w.write_record([
                i.to_string(),
                r.prep_basis.to_string(),
                r.prep_bit.to_string(),
                r.mode.to_string(),
                opt(r.alice_cm_basis.map(|b| b.to_string())),
                opt(r.alice_cm_outcome.map(|b| b.to_string())),
                opt(r.encoding.map(|b| b.to_string())),
                r.bob_outcome.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

pub fn run_session(cfg: &SessionConfig, noise: &NoiseModel) -> Result<SessionLog> {
    cfg.validate()?;
    let channel = Channel::new(*noise)?;
    let mut rng = rng_from_seed(cfg.seed);
    let rounds = (0..cfg.n_rounds).map(|_| run_round(cfg, &channel, &mut rng)).collect();
    Ok(SessionLog { config: *cfg, rounds })
}

/// Runs a session and estimates QBERs without keeping the transcript.
/// Produces the same report as `sift_and_estimate(&run_session(..))`.
pub fn run_and_estimate(cfg: &SessionConfig, noise: &NoiseModel) -> Result<QberReport> {
    cfg.validate()?;
    let channel = Channel::new(*noise)?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut tally = QberTally::default();
    for _ in 0..cfg.n_rounds {
        tally.record(&run_round(cfg, &channel, &mut rng));
    }
    Ok(tally.report())
}

/// Error count over a number of sifted events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Rate {
    pub errors: u64,
    pub trials: u64,
}

impl Rate {
    pub fn new(errors: u64, trials: u64) -> Self {
        debug_assert!(errors <= trials);
        Self { errors, trials }
    }

    pub fn push(&mut self, error: bool) {
        self.trials += 1;
        self.errors += u64::from(error);
    }

    pub fn merge(self, other: Rate) -> Rate {
        Rate::new(self.errors + other.errors, self.trials + other.trials)
    }

    /// `None` for an empty stratum.
    pub fn value(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.errors as f64 / self.trials as f64)
    }

    /// Wald standard error `sqrt(p(1-p)/N)`.
    pub fn std_err(&self) -> Option<f64> {
        self.value().map(|p| (p * (1.0 - p) / self.trials as f64).sqrt())
    }

    pub fn low_confidence(&self) -> bool {
        self.trials < LOW_CONFIDENCE_EVENTS
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Rate", 5)?;
        s.serialize_field("rate", &self.value())?;
        s.serialize_field("errors", &self.errors)?;
        s.serialize_field("trials", &self.trials)?;
        s.serialize_field("std_err", &self.std_err())?;
        s.serialize_field("low_confidence", &self.low_confidence())?;
        s.end()
    }
}

/// `q1 + q2 - 2 q1 q2`: error rate of two independent binary flips in series.
///
/// Evaluated as `1/2 - 2 (1/2 - q1)(1/2 - q2)` so that symmetry and the
/// `q = 1/2` fixed point hold exactly in floating point.
pub fn compose_qab(q1: f64, q2: f64) -> f64 {
    0.5 - 2.0 * (0.5 - q1) * (0.5 - q2)
}

/// Accumulates sifted error counts round by round.
#[derive(Debug, Clone, Default)]
pub struct QberTally {
    rounds: u64,
    control_rounds: u64,
    mismatched_control: u64,
    q1: [Rate; 2],
    q2: [Rate; 2],
    /// Indexed by preparation basis then encoding bit.
    qab: [[Rate; 2]; 2],
}

impl QberTally {
    pub fn record(&mut self, r: &RoundRecord) {
        self.rounds += 1;
        let b = r.prep_basis.index();
        match r.mode {
            Mode::Control => {
                self.control_rounds += 1;
                let (Some(basis), Some(outcome)) = (r.alice_cm_basis, r.alice_cm_outcome) else {
                    return;
                };
                if basis != r.prep_basis {
                    self.mismatched_control += 1;
                    return;
                }
                self.q1[b].push(outcome != r.prep_bit);
                self.q2[b].push(r.bob_outcome != outcome);
            }
            Mode::Encoding => {
                let Some(enc) = r.encoding else { return };
                self.qab[b][enc.index()].push(r.bob_decode() != enc);
            }
        }
    }

    pub fn report(&self) -> QberReport {
        QberReport::from_strata(
            self.rounds,
            self.control_rounds,
            self.mismatched_control,
            self.q1,
            self.q2,
            self.qab,
        )
    }
}

/// Sifts a transcript and estimates every QBER.
pub fn sift_and_estimate(log: &SessionLog) -> Result<QberReport> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut tally = QberTally::default();
    for r in &log.rounds {
        tally.record(r);
    }
    Ok(tally.report())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QberReport {
    pub rounds: u64,
    pub control_rounds: u64,
    pub encoding_rounds: u64,
    /// Control rounds dropped because Alice's basis differed from Bob's.
    pub mismatched_control: u64,
    pub q1z: Rate,
    pub q1x: Rate,
    pub q2z: Rate,
    pub q2x: Rate,
    pub qab_z: Rate,
    pub qab_x: Rate,
    /// Indexed by Alice's encoding bit (`I`, `iY`).
    pub qab_z_by_encoding: [Rate; 2],
    pub qab_x_by_encoding: [Rate; 2],
    pub q1_avg: Option<f64>,
    pub q2_avg: Option<f64>,
    /// Mean of the measured per-basis round-trip QBERs.
    pub qab_m: Option<f64>,
    /// Round-trip QBER composed from the partial QBERs, averaged over bases.
    pub qab_s: Option<f64>,
}

fn mean2(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some((a? + b?) / 2.0)
}

impl QberReport {
    fn from_strata(
        rounds: u64,
        control_rounds: u64,
        mismatched_control: u64,
        q1: [Rate; 2],
        q2: [Rate; 2],
        qab: [[Rate; 2]; 2],
    ) -> Self {
        let qab_z = qab[0][0].merge(qab[0][1]);
        let qab_x = qab[1][0].merge(qab[1][1]);
        let composed = |b: usize| Some(compose_qab(q1[b].value()?, q2[b].value()?));
        Self {
            rounds,
            control_rounds,
            encoding_rounds: rounds - control_rounds,
            mismatched_control,
            q1z: q1[0],
            q1x: q1[1],
            q2z: q2[0],
            q2x: q2[1],
            qab_z,
            qab_x,
            qab_z_by_encoding: qab[0],
            qab_x_by_encoding: qab[1],
            q1_avg: mean2(q1[0].value(), q1[1].value()),
            q2_avg: mean2(q2[0].value(), q2[1].value()),
            qab_m: mean2(qab_z.value(), qab_x.value()),
            qab_s: mean2(composed(0), composed(1)),
        }
    }

    pub fn q1(&self, basis: Basis) -> Rate {
        match basis {
            Basis::Z => self.q1z,
            Basis::X => self.q1x,
        }
    }

    pub fn q2(&self, basis: Basis) -> Rate {
        match basis {
            Basis::Z => self.q2z,
            Basis::X => self.q2x,
        }
    }

    pub fn qab(&self, basis: Basis) -> Rate {
        match basis {
            Basis::Z => self.qab_z,
            Basis::X => self.qab_x,
        }
    }

    pub fn qab_by_encoding(&self, basis: Basis, encoding: Bit) -> Rate {
        match basis {
            Basis::Z => self.qab_z_by_encoding[encoding.index()],
            Basis::X => self.qab_x_by_encoding[encoding.index()],
        }
    }

    /// `compose_qab` of the measured partials for one basis.
    pub fn composed(&self, basis: Basis) -> Option<f64> {
        Some(compose_qab(self.q1(basis).value()?, self.q2(basis).value()?))
    }

    /// Delta-method standard error of [`composed`](Self::composed).
    pub fn composed_std_err(&self, basis: Basis) -> Option<f64> {
        let (q1, q2) = (self.q1(basis), self.q2(basis));
        let (p1, p2) = (q1.value()?, q2.value()?);
        let (s1, s2) = (q1.std_err()?, q2.std_err()?);
        Some((((1.0 - 2.0 * p2) * s1).powi(2) + ((1.0 - 2.0 * p1) * s2).powi(2)).sqrt())
    }

    pub fn qab_m_std_err(&self) -> Option<f64> {
        let (a, b) = (self.qab_z.std_err()?, self.qab_x.std_err()?);
        Some((a * a + b * b).sqrt() / 2.0)
    }

    pub fn qab_s_std_err(&self) -> Option<f64> {
        let (a, b) = (self.composed_std_err(Basis::Z)?, self.composed_std_err(Basis::X)?);
        Some((a * a + b * b).sqrt() / 2.0)
    }

    /// True when any stratum feeding the averages has too few events.
    pub fn low_confidence(&self) -> bool {
        [self.q1z, self.q1x, self.q2z, self.q2x, self.qab_z, self.qab_x]
            .iter()
            .any(Rate::low_confidence)
    }
}

impl Serialize for QberReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("QberReport", 20)?;
        s.serialize_field("rounds", &self.rounds)?;
        s.serialize_field("control_rounds", &self.control_rounds)?;
        s.serialize_field("encoding_rounds", &self.encoding_rounds)?;
        s.serialize_field("mismatched_control", &self.mismatched_control)?;
        s.serialize_field("q1z", &self.q1z)?;
        s.serialize_field("q1x", &self.q1x)?;
        s.serialize_field("q2z", &self.q2z)?;
        s.serialize_field("q2x", &self.q2x)?;
        s.serialize_field("qab_z", &self.qab_z)?;
        s.serialize_field("qab_x", &self.qab_x)?;
        s.serialize_field("qab_z_by_encoding", &self.qab_z_by_encoding)?;
        s.serialize_field("qab_x_by_encoding", &self.qab_x_by_encoding)?;
        s.serialize_field("q1_avg", &self.q1_avg)?;
        s.serialize_field("q2_avg", &self.q2_avg)?;
        s.serialize_field("qab_m", &self.qab_m)?;
        s.serialize_field("qab_m_std_err", &self.qab_m_std_err())?;
        s.serialize_field("qab_s", &self.qab_s)?;
        s.serialize_field("qab_s_std_err", &self.qab_s_std_err())?;
        s.serialize_field("low_confidence", &self.low_confidence())?;
        s.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{AttackSpec, Axis};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn within(x: f64, target: f64, sigma: f64) -> bool {
        (x - target).abs() <= 3.0 * sigma + 1e-12
    }

    /// Draws rounds until one matches `pred`.
    fn find_round(noise: NoiseModel, seed: u64, pred: impl Fn(&RoundRecord) -> bool) -> RoundRecord {
        let cfg = SessionConfig::new(1, 0.5, seed);
        let ch = Channel::new(noise).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let r = run_round(&cfg, &ch, &mut rng);
            if pred(&r) {
                return r;
            }
        }
    }

    #[test]
    fn noiseless_em_flip_decodes() {
        let r = find_round(NoiseModel::noiseless(), 1, |r| {
            r.prep_basis == Basis::Z && r.prep_bit == Bit::Zero && r.encoding == Some(Bit::One)
        });
        assert_eq!(r.bob_outcome, Bit::One);
        assert_eq!(r.alice_cm_basis, None);
        assert_eq!(r.alice_cm_outcome, None);
    }

    #[test]
    fn noiseless_cm_matching_basis() {
        let r = find_round(NoiseModel::noiseless(), 2, |r| {
            r.prep_basis == Basis::X && r.prep_bit == Bit::Zero && r.alice_cm_basis == Some(Basis::X)
        });
        assert_eq!(r.alice_cm_outcome, Some(Bit::Zero));
        assert_eq!(r.bob_outcome, Bit::Zero);
        assert_eq!(r.encoding, None);
    }

    #[test]
    fn maximal_z_attack_randomizes_x_control() {
        let noise = NoiseModel::with_attack(AttackSpec::symmetric(Axis::Z, FRAC_PI_2));
        let cfg = SessionConfig::new(1, 0.5, 0);
        let ch = Channel::new(noise).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rate = Rate::default();
        while rate.trials < 20_000 {
            let r = run_round(&cfg, &ch, &mut rng);
            if r.prep_basis == Basis::X && r.alice_cm_basis == Some(Basis::X) {
                rate.push(r.alice_cm_outcome != Some(r.prep_bit));
            }
        }
        assert!(within(rate.value().unwrap(), 0.5, (0.25 / rate.trials as f64).sqrt()));
    }

    #[test]
    fn sessions_are_deterministic() {
        let noise = NoiseModel {
            attack: AttackSpec::symmetric(Axis::X, 0.9),
            delta: 0.02,
            xi: 0.04,
            ..NoiseModel::default()
        };
        let cfg = SessionConfig::new(1000, 0.5, 77);
        assert_eq!(run_session(&cfg, &noise).unwrap(), run_session(&cfg, &noise).unwrap());
        let other = SessionConfig::new(1000, 0.5, 78);
        assert_ne!(run_session(&cfg, &noise).unwrap(), run_session(&other, &noise).unwrap());
    }

    #[test]
    fn streaming_estimate_matches_log() {
        let noise = NoiseModel::with_attack(AttackSpec::symmetric(Axis::Z, 0.8));
        let cfg = SessionConfig::new(5000, 0.5, 5);
        let from_log = sift_and_estimate(&run_session(&cfg, &noise).unwrap()).unwrap();
        assert_eq!(from_log, run_and_estimate(&cfg, &noise).unwrap());
    }

    #[test]
    fn control_fraction() {
        let cfg = SessionConfig::new(100_000, 0.5, 3);
        let rep = run_and_estimate(&cfg, &NoiseModel::noiseless()).unwrap();
        let f = rep.control_rounds as f64 / rep.rounds as f64;
        assert!(within(f, 0.5, (0.25 / 1e5f64).sqrt()), "f = {f}");
    }

    #[test]
    fn noiseless_session_is_error_free() {
        let cfg = SessionConfig::new(10_000, 0.5, 4);
        let log = run_session(&cfg, &NoiseModel::noiseless()).unwrap();
        for r in &log.rounds {
            match r.mode {
                Mode::Encoding => assert_eq!(Some(r.bob_decode()), r.encoding),
                Mode::Control if r.alice_cm_basis == Some(r.prep_basis) => {
                    assert_eq!(r.alice_cm_outcome, Some(r.prep_bit));
                    assert_eq!(r.alice_cm_outcome, Some(r.bob_outcome));
                }
                Mode::Control => {}
            }
        }
        let rep = sift_and_estimate(&log).unwrap();
        for rate in [rep.q1z, rep.q1x, rep.q2z, rep.q2x, rep.qab_z, rep.qab_x] {
            assert_eq!(rate.value(), Some(0.0));
        }
        assert_eq!(rep.qab_m, Some(0.0));
        assert_eq!(rep.qab_s, Some(0.0));
    }

    #[test]
    fn z_attack_pi_over_3() {
        let noise = NoiseModel::with_attack(AttackSpec::symmetric(Axis::Z, FRAC_PI_3));
        let rep = run_and_estimate(&SessionConfig::new(100_000, 0.5, 21), &noise).unwrap();
        let check = |rate: Rate, p: f64| {
            let v = rate.value().unwrap();
            let sigma = (p * (1.0 - p) / rate.trials as f64).sqrt();
            assert!(within(v, p, sigma), "{v} vs {p}");
        };
        check(rep.q1x, 0.25);
        check(rep.q1z, 0.0);
        check(rep.qab_x, 0.375);
    }

    #[test]
    fn empty_strata_are_undefined() {
        let rep = QberTally::default().report();
        assert_eq!(rep.q1z.value(), None);
        assert_eq!(rep.q1z.std_err(), None);
        assert_eq!(rep.qab_m, None);
        assert_eq!(rep.qab_s, None);
        assert!(rep.low_confidence());

        let log = SessionLog {
            config: SessionConfig::default(),
            rounds: vec![],
        };
        assert!(matches!(sift_and_estimate(&log), Err(Error::EmptyLog)));
    }

    #[test]
    fn mismatched_control_rounds_are_not_sifted() {
        let mut tally = QberTally::default();
        tally.record(&RoundRecord {
            prep_basis: Basis::Z,
            prep_bit: Bit::Zero,
            mode: Mode::Control,
            alice_cm_basis: Some(Basis::X),
            alice_cm_outcome: Some(Bit::One),
            encoding: None,
            bob_outcome: Bit::One,
        });
        let rep = tally.report();
        assert_eq!(rep.mismatched_control, 1);
        assert_eq!(rep.q1z.trials, 0);
        assert_eq!(rep.q2z.trials, 0);
    }

    #[test]
    fn decode_ignores_control_fields() {
        let base = RoundRecord {
            prep_basis: Basis::X,
            prep_bit: Bit::One,
            mode: Mode::Encoding,
            alice_cm_basis: None,
            alice_cm_outcome: None,
            encoding: Some(Bit::One),
            bob_outcome: Bit::Zero,
        };
        let polluted = RoundRecord {
            alice_cm_basis: Some(Basis::Z),
            alice_cm_outcome: Some(Bit::Zero),
            ..base
        };
        assert_eq!(base.bob_decode(), polluted.bob_decode());
    }

    #[test]
    fn compose_examples() {
        assert_eq!(compose_qab(0.0, 0.0), 0.0);
        assert_eq!(compose_qab(0.5, 0.3), 0.5);
        assert!((compose_qab(0.1, 0.2) - 0.26).abs() < 1e-15);
    }

    #[test]
    fn invalid_session_config() {
        assert!(SessionConfig::new(0, 0.5, 0).validate().is_err());
        assert!(SessionConfig::new(10, 0.0, 0).validate().is_err());
        assert!(SessionConfig::new(10, 1.0, 0).validate().is_err());
    }

    #[test]
    fn xi_does_not_lower_qab_m() {
        let qab_m = |xi| {
            let noise = NoiseModel {
                attack: AttackSpec::symmetric(Axis::Z, 0.6),
                xi,
                ..NoiseModel::default()
            };
            let rep = run_and_estimate(&SessionConfig::new(100_000, 0.5, 99), &noise).unwrap();
            (rep.qab_m.unwrap(), rep.qab_m_std_err().unwrap())
        };
        let (a, _) = qab_m(0.0);
        let (b, sb) = qab_m(0.03);
        let (c, sc) = qab_m(0.06);
        // Same seed, so the streams are coupled and shifts are one-sided up to noise.
        assert!(b >= a - 3.0 * sb);
        assert!(c >= b - 3.0 * sc);
        assert!(c > a);
    }

    #[test]
    fn transcript_csv_layout() {
        let log = run_session(&SessionConfig::new(50, 0.5, 8), &NoiseModel::noiseless()).unwrap();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("round,prep_basis,prep_bit,mode,alice_basis,alice_outcome,encoding,bob_outcome")
        );
        assert_eq!(text.lines().count(), 51);
        for line in lines {
            let cells: Vec<_> = line.split(',').collect();
            assert_eq!(cells.len(), 8);
            match cells[3] {
                "CM" => assert!(!cells[4].is_empty() && cells[6].is_empty()),
                "EM" => assert!(cells[4].is_empty() && !cells[6].is_empty()),
                other => panic!("mode {other}"),
            }
        }
        assert!(!text.contains('\r'));
    }

    proptest! {
        #[test]
        fn compose_symmetric(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            prop_assert_eq!(compose_qab(a, b), compose_qab(b, a));
        }

        #[test]
        fn compose_half_is_fixed_point(a in 0.0f64..=1.0) {
            prop_assert_eq!(compose_qab(a, 0.5), 0.5);
        }

        #[test]
        fn rate_matches_counts(errors in 0u64..1000, extra in 0u64..1000) {
            let r = Rate::new(errors, errors + extra);
            if r.trials == 0 {
                prop_assert!(r.value().is_none());
            } else {
                let p = errors as f64 / r.trials as f64;
                prop_assert_eq!(r.value(), Some(p));
                prop_assert_eq!(r.std_err(), Some((p * (1.0 - p) / r.trials as f64).sqrt()));
            }
        }
    }
}
