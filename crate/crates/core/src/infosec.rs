//! Mutual-information curves and the one-way distillation condition
//! `I_AB >= min(I_AE, I_BE)`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::channel::{AttackSpec, Axis};
use crate::eavesdrop::{compose_qbe, eve_error_rate, EvePrediction};
use crate::error::{check_range, Error, Result};
use crate::protocol::QberReport;
use crate::quantum::Basis;

/// Bracket width, in radians, at which [`find_threshold`] stops.
pub const THRESHOLD_TOL: f64 = 1e-6;

/// `H(x) = -x log2 x - (1-x) log2(1-x)`, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_range("x", x, 0.0, 1.0, "[0, 1]")?;
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// `1 - H(q)`: information per bit over a binary symmetric channel.
fn bsc_info(q: f64) -> Result<f64> {
    Ok(1.0 - binary_entropy(q)?)
}

/// How Eve's information is averaged over the two attack axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// Only the axis Eve actually uses contributes.
    #[default]
    ActualAttack,
    /// Eve picks the Z- or X-attack with equal probability at the same angle.
    FiftyFifty,
}

impl Averaging {
    pub const ALL: [Averaging; 2] = [Averaging::ActualAttack, Averaging::FiftyFifty];

    pub fn label(self) -> &'static str {
        match self {
            Averaging::ActualAttack => "actual",
            Averaging::FiftyFifty => "fifty-fifty",
        }
    }
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Averaging {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "actual" | "actual-attack" => Ok(Averaging::ActualAttack),
            "fifty-fifty" => Ok(Averaging::FiftyFifty),
            other => Err(format!("unknown eve averaging `{other}` (expected actual|fifty-fifty)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoReport {
    pub i_ab: f64,
    pub i_ae: f64,
    pub i_be: f64,
    /// `i_ab - min(i_ae, i_be)`; positive means a key can be distilled.
    pub margin: f64,
    pub q_ab_s: f64,
    pub averaging: Averaging,
}

impl InfoReport {
    fn new(i_ab: f64, i_ae: f64, i_be: f64, q_ab_s: f64, averaging: Averaging) -> Self {
        Self {
            i_ab,
            i_ae,
            i_be,
            margin: i_ab - i_ae.min(i_be),
            q_ab_s,
            averaging,
        }
    }

    fn from_prediction(p: &EvePrediction, averaging: Averaging) -> Result<Self> {
        let i_ab = (bsc_info(p.qab_z)? + bsc_info(p.qab_x)?) / 2.0;
        let i_be = (bsc_info(p.q_be_z)? + bsc_info(p.q_be_x)?) / 2.0;
        Ok(Self::new(i_ab, bsc_info(p.q_ae)?, i_be, p.qab_s(), averaging))
    }
}

/// Closed-form information curves for an attack.
///
/// With [`Averaging::FiftyFifty`] the attack's axis is ignored: Alice and
/// Bob see the mixture of a Z- and an X-attack at the given angles, and Eve's
/// information is averaged over the two attacks.
pub fn info_curves(attack: &AttackSpec, averaging: Averaging) -> Result<InfoReport> {
    match (averaging, attack.axis) {
        (Averaging::ActualAttack, _) | (Averaging::FiftyFifty, None) => {
            InfoReport::from_prediction(&EvePrediction::for_attack(attack)?, averaging)
        }
        (Averaging::FiftyFifty, Some(_)) => {
            let pz = EvePrediction::for_attack(&attack.with_axis(Axis::Z))?;
            let px = EvePrediction::for_attack(&attack.with_axis(Axis::X))?;
            let qab = |b: Basis| (pz.qab(b) + px.qab(b)) / 2.0;
            let i_ab = (bsc_info(qab(Basis::Z))? + bsc_info(qab(Basis::X))?) / 2.0;
            let i_ae = (bsc_info(pz.q_ae)? + bsc_info(px.q_ae)?) / 2.0;
            let i_be =
                (bsc_info(pz.q_be_z)? + bsc_info(pz.q_be_x)? + bsc_info(px.q_be_x)? + bsc_info(px.q_be_z)?) / 4.0;
            let q_ab_s = (qab(Basis::Z) + qab(Basis::X)) / 2.0;
            Ok(InfoReport::new(i_ab, i_ae, i_be, q_ab_s, averaging))
        }
    }
}

/// Information curves evaluated at measured QBERs.
///
/// `axis` is the attack assumed to be in force for
/// [`Averaging::ActualAttack`]. Under [`Averaging::FiftyFifty`] both Eve
/// error rates are formed from the measured partials (the Z-attack from the
/// X-basis partials and vice versa) and combined with the measured per-basis
/// round-trip QBERs. Partials above 1/2 are clamped to 1/2.
pub fn info_from_report(report: &QberReport, axis: Option<Axis>, averaging: Averaging) -> Result<InfoReport> {
    let get = |v: Option<f64>, what: &str| {
        v.ok_or_else(|| Error::Invalid(format!("{what} is undefined (no events in stratum)")))
    };
    let qab_z = get(report.qab_z.value(), "qab_z")?;
    let qab_x = get(report.qab_x.value(), "qab_x")?;
    let q_ab_s = get(report.qab_s, "qab_s")?;
    let eve = |b: Basis| -> Result<f64> {
        let q1 = get(report.q1(b).value(), "q1")?.min(0.5);
        let q2 = get(report.q2(b).value(), "q2")?.min(0.5);
        eve_error_rate(q1, q2)
    };
    // Z-attack information shows up in the X-basis partials.
    let q_ae_for = |a: Axis| match a {
        Axis::Z => eve(Basis::X),
        Axis::X => eve(Basis::Z),
    };
    let i_ab = (bsc_info(qab_z)? + bsc_info(qab_x)?) / 2.0;
    let be = |q_ae: f64| -> Result<f64> {
        Ok((bsc_info(compose_qbe(qab_z, q_ae))? + bsc_info(compose_qbe(qab_x, q_ae))?) / 2.0)
    };
    match averaging {
        Averaging::ActualAttack => {
            let q_ae = match axis {
                Some(a) => q_ae_for(a)?,
                None => 0.5,
            };
            Ok(InfoReport::new(i_ab, bsc_info(q_ae)?, be(q_ae)?, q_ab_s, averaging))
        }
        Averaging::FiftyFifty => {
            let (qz, qx) = (q_ae_for(Axis::Z)?, q_ae_for(Axis::X)?);
            let i_ae = (bsc_info(qz)? + bsc_info(qx)?) / 2.0;
            let i_be = (be(qz)? + be(qx)?) / 2.0;
            Ok(InfoReport::new(i_ab, i_ae, i_be, q_ab_s, averaging))
        }
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, stopping once the
/// bracket is narrower than `tol`. Returns the midpoint of the final bracket
/// and the number of halvings, or `None` without a sign change.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<(f64, u32)> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some((lo, 0));
    }
    if f_hi == 0.0 {
        return Some((hi, 0));
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        iterations += 1;
        if f_mid == 0.0 {
            return Some((mid, iterations));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some((0.5 * (lo + hi), iterations))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub phi: f64,
    pub q_ab_s: f64,
    pub i_ab: f64,
    pub i_ae: f64,
    pub iterations: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub averaging: Averaging,
    /// `I_AB` decreasing and `I_AE` increasing along the sweep grid.
    pub monotone: bool,
    pub crossing: Option<Crossing>,
}

/// Grid used for the monotonicity precondition of [`find_threshold`].
const MONOTONE_GRID: usize = 1000;

/// Where `I_AB` meets `I_AE` along the symmetric Z-attack family
/// `phi_f = phi_b = phi`, reported as `Q_AB^s` at the crossing.
pub fn find_threshold(averaging: Averaging) -> Result<Threshold> {
    let curves = |phi: f64| info_curves(&AttackSpec::symmetric(Axis::Z, phi), averaging);

    let mut monotone = true;
    let mut prev = curves(0.0)?;
    for k in 1..=MONOTONE_GRID {
        let next = curves(FRAC_PI_2 * k as f64 / MONOTONE_GRID as f64)?;
        monotone &= next.i_ab < prev.i_ab && next.i_ae > prev.i_ae;
        prev = next;
    }

    let gap = |phi: f64| curves(phi).map(|r| r.i_ab - r.i_ae).unwrap_or(f64::NAN);
    let crossing = match bisect(gap, 0.0, FRAC_PI_2, THRESHOLD_TOL) {
        Some((phi, iterations)) => {
            let r = curves(phi)?;
            Some(Crossing {
                phi,
                q_ab_s: r.q_ab_s,
                i_ab: r.i_ab,
                i_ae: r.i_ae,
                iterations,
            })
        }
        None => None,
    };
    Ok(Threshold {
        averaging,
        monotone,
        crossing,
    })
}
