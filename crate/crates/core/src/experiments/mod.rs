//! Experiment drivers behind the `lm05` command-line tool: single sessions,
//! angle sweeps, the randomized imperfection band and the security threshold.
//!
//! Grid points and band trials run in parallel, each with its own seed
//! derived from the base seed and its index; results are collected in index
//! order so output files are byte-identical for identical configurations.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::channel::{AttackSpec, Axis, NoiseModel};
use crate::eavesdrop::EvePrediction;
use crate::error::{Error, Result};
use crate::infosec::{find_threshold, info_curves, info_from_report, Averaging, InfoReport, Threshold};
use crate::protocol::{run_and_estimate, run_session, sift_and_estimate, QberReport, SessionConfig, SessionLog};
use crate::rng_from_seed;

pub use config::{BandConfig, ExperimentConfig, OutputConfig, OutputFormat, SweepGrid};
pub use output::{ensure_writable, Cell, Meta, Table};

/// Histogram bin edge length on both axes of the band plot.
pub const BAND_BIN: f64 = 0.005;

fn meta(cfg: &ExperimentConfig) -> Meta {
    Meta {
        seed: cfg.session.seed,
        config_hash: cfg.hash(),
    }
}

fn attack_axis(noise: &NoiseModel) -> Axis {
    noise.attack.axis.unwrap_or(Axis::Z)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: SessionLog,
    pub report: QberReport,
    /// Information curves at the measured rates; `None` when a stratum is empty.
    pub info: Option<InfoReport>,
    pub predicted: EvePrediction,
    pub predicted_info: InfoReport,
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let log = run_session(&cfg.session, &cfg.noise)?;
    let report = sift_and_estimate(&log)?;
    let info = info_from_report(&report, cfg.noise.attack.axis, cfg.averaging).ok();
    Ok(RunOutput {
        log,
        predicted: EvePrediction::for_attack(&cfg.noise.attack)?,
        predicted_info: info_curves(&cfg.noise.attack, cfg.averaging)?,
        report,
        info,
    })
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub phi: f64,
    pub seed: u64,
    pub report: QberReport,
    pub predicted: EvePrediction,
    pub info: InfoReport,
}

/// One session per grid angle with a symmetric attack `phi_f = phi_b = phi`
/// on the configured axis (Z when none is set). Imperfections are kept.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let grid = cfg
        .sweep
        .ok_or_else(|| Error::Invalid("sweep needs a sweep.* section".into()))?;
    let axis = attack_axis(&cfg.noise);
    grid.angles()
        .into_par_iter()
        .enumerate()
        .map(|(index, phi)| {
            let attack = AttackSpec::symmetric(axis, phi);
            let noise = NoiseModel { attack, ..cfg.noise };
            let seed = cfg.session.seed.wrapping_add(index as u64);
            let session = SessionConfig::new(grid.rounds, cfg.session.control_prob, seed);
            Ok(SweepPoint {
                index,
                phi,
                seed,
                report: run_and_estimate(&session, &noise)?,
                predicted: EvePrediction::for_attack(&attack)?,
                info: info_curves(&attack, cfg.averaging)?,
            })
        })
        .collect()
}

pub fn sweep_table(points: &[SweepPoint]) -> Table {
    let mut t = Table::new(vec![
        "index",
        "phi",
        "seed",
        "qab_m",
        "qab_m_se",
        "qab_s",
        "qab_s_se",
        "qab_s_pred",
        "q1z",
        "q1x",
        "q2z",
        "q2x",
        "qab_z",
        "qab_x",
        "q_ae_pred",
        "i_ab",
        "i_ae",
        "i_be",
        "margin",
    ]);
    for p in points {
        let r = &p.report;
        t.push(vec![
            p.index.into(),
            p.phi.into(),
            p.seed.into(),
            r.qab_m.into(),
            r.qab_m_std_err().into(),
            r.qab_s.into(),
            r.qab_s_std_err().into(),
            p.predicted.qab_s().into(),
            r.q1z.value().into(),
            r.q1x.value().into(),
            r.q2z.value().into(),
            r.q2x.value().into(),
            r.qab_z.value().into(),
            r.qab_x.value().into(),
            p.predicted.q_ae.into(),
            p.info.i_ab.into(),
            p.info.i_ae.into(),
            p.info.i_be.into(),
            p.info.margin.into(),
        ]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandTrial {
    pub index: u64,
    pub delta: f64,
    pub xi: f64,
    pub phi_forward: f64,
    pub phi_backward: f64,
    pub qab_s: Option<f64>,
    pub qab_m: Option<f64>,
    /// Combined standard error of `qab_m - qab_s`.
    pub offset_std_err: Option<f64>,
}

impl BandTrial {
    pub fn offset(&self) -> Option<f64> {
        Some(self.qab_m? - self.qab_s?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistBin {
    /// Lower edges of the bin.
    pub qab_s: f64,
    pub qab_m: f64,
    pub count: u64,
    /// `count / max count`.
    pub normalized: f64,
}

/// Distance of the scatter from the identity line `qab_m = qab_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandSummary {
    pub trials: u64,
    /// Trials where both coordinates are defined.
    pub defined: u64,
    pub mean_offset: f64,
    /// Standard error of `mean_offset` across trials.
    pub mean_offset_std_err: f64,
    /// Fraction of defined trials with `|offset| <= 3 sigma`.
    pub within_3_sigma: f64,
    /// Fraction of defined trials with `offset >= -3 sigma`.
    pub not_below_3_sigma: f64,
}

#[derive(Debug, Clone)]
pub struct BandResult {
    pub trials: Vec<BandTrial>,
    pub histogram: Vec<HistBin>,
    pub summary: BandSummary,
}

/// Independent short sessions with `delta ~ U[0, delta_max]`,
/// `xi ~ U[0, xi_max]` and both attack angles `~ U[0, phi_max]`.
pub fn band(cfg: &ExperimentConfig) -> Result<BandResult> {
    cfg.validate()?;
    let b = cfg
        .band
        .ok_or_else(|| Error::Invalid("band needs a band.* section".into()))?;
    let axis = attack_axis(&cfg.noise);
    let trials = (0..b.trials)
        .into_par_iter()
        .map(|index| {
            let mut rng = rng_from_seed(cfg.session.seed.wrapping_add(index));
            let delta = b.delta_max * rng.random::<f64>();
            let xi = b.xi_max * rng.random::<f64>();
            let phi_forward = b.phi_max * rng.random::<f64>();
            let phi_backward = b.phi_max * rng.random::<f64>();
            let noise = NoiseModel {
                attack: AttackSpec::new(Some(axis), phi_forward, phi_backward),
                delta,
                xi,
                ..cfg.noise
            };
            let session = SessionConfig::new(b.rounds_per_trial, cfg.session.control_prob, rng.random());
            let r = run_and_estimate(&session, &noise)?;
            let offset_std_err = r
                .qab_m_std_err()
                .zip(r.qab_s_std_err())
                .map(|(m, s)| (m * m + s * s).sqrt());
            Ok(BandTrial {
                index,
                delta,
                xi,
                phi_forward,
                phi_backward,
                qab_s: r.qab_s,
                qab_m: r.qab_m,
                offset_std_err,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let histogram = histogram(&trials);
    let summary = summarize(&trials);
    Ok(BandResult {
        trials,
        histogram,
        summary,
    })
}

fn histogram(trials: &[BandTrial]) -> Vec<HistBin> {
    let mut counts: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    for t in trials {
        if let (Some(s), Some(m)) = (t.qab_s, t.qab_m) {
            let key = ((s / BAND_BIN).floor() as i64, (m / BAND_BIN).floor() as i64);
            *counts.entry(key).or_default() += 1;
        }
    }
    let max = counts.values().copied().max().unwrap_or(1) as f64;
    counts
        .into_iter()
        .map(|((i, j), count)| HistBin {
            qab_s: i as f64 * BAND_BIN,
            qab_m: j as f64 * BAND_BIN,
            count,
            normalized: count as f64 / max,
        })
        .collect()
}

fn summarize(trials: &[BandTrial]) -> BandSummary {
    let defined: Vec<(f64, f64)> = trials
        .iter()
        .filter_map(|t| Some((t.offset()?, t.offset_std_err?)))
        .collect();
    let n = defined.len() as f64;
    let mean = defined.iter().map(|d| d.0).sum::<f64>() / n;
    let var = defined.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let frac = |pred: &dyn Fn(f64, f64) -> bool| defined.iter().filter(|(o, s)| pred(*o, *s)).count() as f64 / n;
    BandSummary {
        trials: trials.len() as u64,
        defined: defined.len() as u64,
        mean_offset: mean,
        mean_offset_std_err: (var / n).sqrt(),
        within_3_sigma: frac(&|o, s| o.abs() <= 3.0 * s),
        not_below_3_sigma: frac(&|o, s| o >= -3.0 * s),
    }
}

pub fn band_scatter_table(result: &BandResult) -> Table {
    let mut t = Table::new(vec![
        "trial",
        "delta",
        "xi",
        "phi_forward",
        "phi_backward",
        "qab_s",
        "qab_m",
        "offset_se",
    ]);
    for tr in &result.trials {
        t.push(vec![
            tr.index.into(),
            tr.delta.into(),
            tr.xi.into(),
            tr.phi_forward.into(),
            tr.phi_backward.into(),
            tr.qab_s.into(),
            tr.qab_m.into(),
            tr.offset_std_err.into(),
        ]);
    }
    t
}

pub fn band_histogram_table(result: &BandResult) -> Table {
    let mut t = Table::new(vec!["qab_s_lo", "qab_m_lo", "count", "normalized"]);
    for b in &result.histogram {
        t.push(vec![
            b.qab_s.into(),
            b.qab_m.into(),
            b.count.into(),
            b.normalized.into(),
        ]);
    }
    t
}

/// Threshold for one averaging convention plus the sign of the curve gaps a
/// small step either side of the crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdEntry {
    pub threshold: Threshold,
    /// `i_ab - i_ae` just below and just above the crossing.
    pub gap_below: Option<f64>,
    pub gap_above: Option<f64>,
    /// Distillation margin `i_ab - min(i_ae, i_be)` at the same points.
    pub margin_below: Option<f64>,
    pub margin_above: Option<f64>,
}

/// Offset, in radians, of the diagnostic points around the crossing.
const PROBE_STEP: f64 = 1e-3;

pub fn threshold() -> Result<Vec<ThresholdEntry>> {
    Averaging::ALL
        .into_iter()
        .map(|averaging| {
            let threshold = find_threshold(averaging)?;
            let probe = |phi: f64| info_curves(&AttackSpec::symmetric(Axis::Z, phi), averaging);
            let (below, above) = match threshold.crossing {
                Some(c) => (
                    Some(probe((c.phi - PROBE_STEP).max(0.0))?),
                    Some(probe((c.phi + PROBE_STEP).min(FRAC_PI_2))?),
                ),
                None => (None, None),
            };
            Ok(ThresholdEntry {
                threshold,
                gap_below: below.map(|r| r.i_ab - r.i_ae),
                gap_above: above.map(|r| r.i_ab - r.i_ae),
                margin_below: below.map(|r| r.margin),
                margin_above: above.map(|r| r.margin),
            })
        })
        .collect()
}

pub fn threshold_table(entries: &[ThresholdEntry]) -> Table {
    let mut t = Table::new(vec![
        "averaging",
        "crossing",
        "phi",
        "q_ab_s",
        "i_ab",
        "i_ae",
        "iterations",
        "monotone",
        "gap_below",
        "gap_above",
        "margin_below",
        "margin_above",
    ]);
    for e in entries {
        let c = e.threshold.crossing;
        t.push(vec![
            e.threshold.averaging.label().into(),
            c.is_some().into(),
            c.map(|c| c.phi).into(),
            c.map(|c| c.q_ab_s).into(),
            c.map(|c| c.i_ab).into(),
            c.map(|c| c.i_ae).into(),
            c.map_or(Cell::Empty, |c| Cell::Int(c.iterations.into())),
            e.threshold.monotone.into(),
            e.gap_below.into(),
            e.gap_above.into(),
            e.margin_below.into(),
            e.margin_above.into(),
        ]);
    }
    t
}

/// Closed-form information curves along the symmetric Z-attack family.
pub fn curve_table(angles: &[f64], averaging: Averaging) -> Result<Table> {
    let mut t = Table::new(vec!["phi", "q_ab_s", "i_ab", "i_ae", "i_be", "margin"]);
    for &phi in angles {
        let r = info_curves(&AttackSpec::symmetric(Axis::Z, phi), averaging)?;
        t.push(vec![
            phi.into(),
            r.q_ab_s.into(),
            r.i_ab.into(),
            r.i_ae.into(),
            r.i_be.into(),
            r.margin.into(),
        ]);
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Sweep,
    Band,
    Threshold,
}

/// What a command produced: files written and a short human-readable summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6}"))
}

/// Runs `command` and writes its output files under `cfg.output.path`.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let dir = cfg.output.path.clone();
    ensure_writable(&dir)?;
    let meta = meta(cfg);
    let format = cfg.output.format;
    let mut files = Vec::new();
    let summary = match command {
        Command::Run => {
            let out = run(cfg)?;
            let path = dir.join("transcript.csv");
            let mut w = output::create(&path)?;
            {
                use std::io::Write;
                writeln!(w, "{}", meta.comment()).map_err(|source| Error::Output {
                    path: path.clone(),
                    source,
                })?;
            }
            out.log.write_csv(&mut w)?;
            output::finish(w, &path)?;
            files.push(path);

            let path = dir.join("report.json");
            let mut w = output::create(&path)?;
            let doc = json!({
                "seed": meta.seed,
                "config_hash": meta.config_hash,
                "qber": out.report,
                "info": out.info,
                "predicted": out.predicted,
                "predicted_info": out.predicted_info,
            });
            output::write_json(&mut w, &doc)?;
            output::finish(w, &path)?;
            files.push(path);
            format!(
                "rounds={} qab_m={} qab_s={}",
                out.report.rounds,
                fmt_opt(out.report.qab_m),
                fmt_opt(out.report.qab_s)
            )
        }
        Command::Sweep => {
            let points = sweep(cfg)?;
            files.push(sweep_table(&points).write_to(&dir, "sweep", format, &meta)?);
            format!("{} grid points", points.len())
        }
        Command::Band => {
            let result = band(cfg)?;
            files.push(band_scatter_table(&result).write_to(&dir, "band_scatter", format, &meta)?);
            files.push(band_histogram_table(&result).write_to(&dir, "band_histogram", format, &meta)?);
            let s = result.summary;
            format!(
                "{} trials, mean(qab_m - qab_s) = {:.6} +- {:.6}",
                s.trials, s.mean_offset, s.mean_offset_std_err
            )
        }
        Command::Threshold => {
            let entries = threshold()?;
            files.push(threshold_table(&entries).write_to(&dir, "threshold", format, &meta)?);
            let angles = cfg.sweep.map_or_else(
                || {
                    SweepGrid {
                        steps: 91,
                        ..SweepGrid::default()
                    }
                    .angles()
                },
                |g| g.angles(),
            );
            files.push(curve_table(&angles, cfg.averaging)?.write_to(&dir, "curves", format, &meta)?);
            entries
                .iter()
                .map(|e| match e.threshold.crossing {
                    Some(c) => format!(
                        "{}: Q_AB^s* = {:.4} (phi = {:.6}, {} bisection steps, I_AB - I_AE {:+.2e} -> {:+.2e})",
                        e.threshold.averaging,
                        c.q_ab_s,
                        c.phi,
                        c.iterations,
                        e.gap_below.unwrap_or(f64::NAN),
                        e.gap_above.unwrap_or(f64::NAN),
                    ),
                    None => format!("{}: no crossing", e.threshold.averaging),
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
    };
    Ok(Outcome { files, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mut cfg: ExperimentConfig) -> ExperimentConfig {
        cfg.session.n_rounds = 2000;
        cfg
    }

    #[test]
    fn zero_angle_sweep_is_all_zero() {
        let mut cfg = small(ExperimentConfig::default());
        cfg.sweep = Some(SweepGrid {
            start: 0.0,
            stop: 0.0,
            steps: 1,
            rounds: 5000,
        });
        let pts = sweep(&cfg).unwrap();
        assert_eq!(pts.len(), 1);
        let r = &pts[0].report;
        assert_eq!((r.qab_m, r.qab_s), (Some(0.0), Some(0.0)));
        assert_eq!(pts[0].predicted.qab_s(), 0.0);
        assert_eq!(sweep_table(&pts).rows.len(), 1);
    }

    #[test]
    fn missing_sections_are_invalid() {
        let cfg = ExperimentConfig::default();
        assert!(matches!(sweep(&cfg), Err(Error::Invalid(_))));
        assert!(matches!(band(&cfg), Err(Error::Invalid(_))));
    }

    #[test]
    fn single_band_trial() {
        let cfg = ExperimentConfig {
            band: Some(BandConfig {
                trials: 1,
                ..BandConfig::default()
            }),
            ..ExperimentConfig::default()
        };
        let r = band(&cfg).unwrap();
        assert_eq!(r.trials.len(), 1);
        assert_eq!(band_scatter_table(&r).rows.len(), 1);
        let total: u64 = r.histogram.iter().map(|b| b.count).sum();
        assert_eq!(total, 1);
        assert_eq!(r.histogram[0].normalized, 1.0);
    }

    #[test]
    fn histogram_bins_and_normalization() {
        let mk = |s, m| BandTrial {
            index: 0,
            delta: 0.0,
            xi: 0.0,
            phi_forward: 0.0,
            phi_backward: 0.0,
            qab_s: Some(s),
            qab_m: Some(m),
            offset_std_err: Some(0.0),
        };
        let h = histogram(&[mk(0.001, 0.002), mk(0.004, 0.0049), mk(0.006, 0.001), mk(0.1, 0.1)]);
        assert_eq!(h.len(), 3);
        assert_eq!(
            (h[0].qab_s, h[0].qab_m, h[0].count, h[0].normalized),
            (0.0, 0.0, 2, 1.0)
        );
        assert_eq!((h[1].qab_s, h[1].count, h[1].normalized), (0.005, 1, 0.5));
    }

    #[test]
    fn threshold_entries_cover_both_conventions() {
        let entries = threshold().unwrap();
        assert_eq!(entries.len(), 2);
        for e in &entries {
            assert!(e.threshold.crossing.is_some());
            assert!(e.gap_below.unwrap() > 0.0 && e.gap_above.unwrap() < 0.0);
        }
    }

    #[test]
    fn curve_table_columns() {
        let t = curve_table(&[0.0, 1.0], Averaging::ActualAttack).unwrap();
        assert_eq!(t.columns, vec!["phi", "q_ab_s", "i_ab", "i_ae", "i_be", "margin"]);
        assert_eq!(t.rows.len(), 2);
    }
}
