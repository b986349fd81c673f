//! Line-oriented `key = value` configuration with dotted section prefixes.
//!
//! ```text
//! # Fig. 2 solid line
//! session.rounds = 100000
//! session.seed = 7
//! noise.axis = z
//! noise.delta = 0.015
//! noise.xi = 0.03
//! sweep.steps = 21
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Unknown or repeated
//! keys are errors. Angles are in radians, probabilities are plain numbers.

use std::collections::HashSet;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::channel::{AttackSpec, Axis, NoiseModel, ReadoutScope};
use crate::error::{check_range, Error, Result};
use crate::infosec::Averaging;
use crate::protocol::SessionConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    /// Session size at every grid point.
    pub rounds: u64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: FRAC_PI_2,
            steps: 21,
            rounds: 100_000,
        }
    }
}

impl SweepGrid {
    /// Evenly spaced angles from `start` to `stop` inclusive.
    pub fn angles(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.stop
                } else {
                    self.start + step * k as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandConfig {
    pub delta_max: f64,
    pub xi_max: f64,
    pub trials: u64,
    pub rounds_per_trial: u64,
    /// Attack angles are drawn uniformly from `[0, phi_max]`.
    pub phi_max: f64,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self {
            delta_max: 0.03,
            xi_max: 0.06,
            trials: 500_000,
            rounds_per_trial: 1_000,
            phi_max: FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown output format `{other}` (expected csv|json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    /// Directory receiving the output files.
    pub path: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            path: PathBuf::from("out"),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub session: SessionConfig,
    pub noise: NoiseModel,
    pub sweep: Option<SweepGrid>,
    pub band: Option<BandConfig>,
    pub output: OutputConfig,
    pub averaging: Averaging,
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| Error::Config {
        line,
        msg: format!("bad value `{value}` for {key}: {e}"),
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(Error::Config {
                    line,
                    msg: format!("expected `key = value`, got `{trimmed}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config {
                    line,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            cfg.set(line, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        macro_rules! v {
            () => {
                parse_value(line, key, value)?
            };
        }
        match key {
            "session.rounds" => self.session.n_rounds = v!(),
            "session.control_prob" => self.session.control_prob = v!(),
            "session.seed" => self.session.seed = v!(),
            "noise.axis" => {
                self.noise.attack.axis = match value {
                    "none" => None,
                    other => Some(parse_value::<Axis>(line, key, other)?),
                }
            }
            "noise.phi_forward" => self.noise.attack.phi_forward = v!(),
            "noise.phi_backward" => self.noise.attack.phi_backward = v!(),
            "noise.delta" => self.noise.delta = v!(),
            "noise.xi" => self.noise.xi = v!(),
            "noise.baseline_flip_forward" => self.noise.baseline_flip_forward = v!(),
            "noise.baseline_flip_backward" => self.noise.baseline_flip_backward = v!(),
            "noise.readout" => self.noise.readout = parse_value::<ReadoutScope>(line, key, value)?,
            "sweep.start" => self.sweep.get_or_insert_with(Default::default).start = v!(),
            "sweep.stop" => self.sweep.get_or_insert_with(Default::default).stop = v!(),
            "sweep.steps" => self.sweep.get_or_insert_with(Default::default).steps = v!(),
            "sweep.rounds" => self.sweep.get_or_insert_with(Default::default).rounds = v!(),
            "band.delta_max" => self.band.get_or_insert_with(Default::default).delta_max = v!(),
            "band.xi_max" => self.band.get_or_insert_with(Default::default).xi_max = v!(),
            "band.trials" => self.band.get_or_insert_with(Default::default).trials = v!(),
            "band.rounds_per_trial" => self.band.get_or_insert_with(Default::default).rounds_per_trial = v!(),
            "band.phi_max" => self.band.get_or_insert_with(Default::default).phi_max = v!(),
            "output.path" => self.output.path = PathBuf::from(value),
            "output.format" => self.output.format = v!(),
            "analysis.eve_averaging" => self.averaging = v!(),
            other => {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.session.validate()?;
        self.noise.validate()?;
        if let Some(s) = &self.sweep {
            check_range("sweep.start", s.start, 0.0, FRAC_PI_2, "[0, pi/2]")?;
            check_range("sweep.stop", s.stop, 0.0, FRAC_PI_2, "[0, pi/2]")?;
            if s.steps == 0 {
                return Err(Error::Invalid("sweep.steps must be at least 1".into()));
            }
            if s.rounds == 0 {
                return Err(Error::Invalid("sweep.rounds must be at least 1".into()));
            }
        }
        if let Some(b) = &self.band {
            check_range("band.delta_max", b.delta_max, 0.0, 1.0, "[0, 1]")?;
            check_range("band.xi_max", b.xi_max, 0.0, 1.0, "[0, 1]")?;
            check_range("band.phi_max", b.phi_max, 0.0, FRAC_PI_2, "[0, pi/2]")?;
            if b.trials == 0 || b.rounds_per_trial == 0 {
                return Err(Error::Invalid(
                    "band.trials and band.rounds_per_trial must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// Canonical text form; [`parse`](Self::parse) reads it back unchanged.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("session.rounds", &self.session.n_rounds);
        kv("session.control_prob", &self.session.control_prob);
        kv("session.seed", &self.session.seed);
        let attack: &AttackSpec = &self.noise.attack;
        kv("noise.axis", &attack.axis.map_or("none", Axis::label));
        kv("noise.phi_forward", &attack.phi_forward);
        kv("noise.phi_backward", &attack.phi_backward);
        kv("noise.delta", &self.noise.delta);
        kv("noise.xi", &self.noise.xi);
        kv("noise.baseline_flip_forward", &self.noise.baseline_flip_forward);
        kv("noise.baseline_flip_backward", &self.noise.baseline_flip_backward);
        kv("noise.readout", &self.noise.readout.label());
        if let Some(g) = &self.sweep {
            kv("sweep.start", &g.start);
            kv("sweep.stop", &g.stop);
            kv("sweep.steps", &g.steps);
            kv("sweep.rounds", &g.rounds);
        }
        if let Some(b) = &self.band {
            kv("band.delta_max", &b.delta_max);
            kv("band.xi_max", &b.xi_max);
            kv("band.trials", &b.trials);
            kv("band.rounds_per_trial", &b.rounds_per_trial);
            kv("band.phi_max", &b.phi_max);
        }
        kv("output.path", &self.output.path.display());
        kv("output.format", &self.output.format.extension());
        kv("analysis.eve_averaging", &self.averaging.label());
        s
    }

    /// First 16 hex digits of the SHA-256 of the canonical text form, with
    /// the output directory left out so relocated runs hash the same.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output.path = OutputConfig::default().path;
        let digest = Sha256::digest(canonical.to_config_string().as_bytes());
        digest.iter().take(8).fold(String::new(), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        })
    }
}
