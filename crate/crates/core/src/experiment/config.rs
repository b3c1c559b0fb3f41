//! Experiment configuration and its flat `key = value` file format.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Result, TodaError};
use crate::integrator::MAX_DT;

/// How the initial gaps `q_{j+1} - q_j` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcMode {
    NormalGaps,
    UnitGaps,
    NegativeUnitGaps,
}

impl FromStr for IcMode {
    type Err = TodaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal_gaps" => Ok(Self::NormalGaps),
            "unit_gaps" => Ok(Self::UnitGaps),
            "negative_unit_gaps" => Ok(Self::NegativeUnitGaps),
            other => Err(TodaError::Config(format!("unknown ic_mode '{other}'"))),
        }
    }
}

impl fmt::Display for IcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NormalGaps => "normal_gaps",
            Self::UnitGaps => "unit_gaps",
            Self::NegativeUnitGaps => "negative_unit_gaps",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub c: f64,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub ic_mode: IcMode,
    /// Output directory.
    pub outputs: PathBuf,
}

const KEYS: [&str; 7] = ["n", "c", "dt", "t_end", "seed", "ic_mode", "outputs"];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 20,
            c: 0.0,
            dt: 1e-4,
            t_end: 20.0,
            seed: 0,
            ic_mode: IcMode::NormalGaps,
            outputs: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| TodaError::Config(format!("bad value for {key}: '{value}'")))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(TodaError::Config(format!("n must be >= 2, got {}", self.n)));
        }
        if !self.c.is_finite() {
            return Err(TodaError::Config("c must be finite".into()));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(TodaError::Config(format!("dt = {} outside (0, {MAX_DT}]", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(TodaError::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return Err(TodaError::Config(format!(
                "t_end = {} is not a whole number of steps of {}",
                self.t_end, self.dt
            )));
        }
        Ok(())
    }

    /// Overlay `key = value` lines on `self`. Blank lines and `#` comments are
    /// skipped; unknown or repeated keys are errors.
    pub fn apply_text(mut self, text: &str) -> Result<Self> {
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                TodaError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(TodaError::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if seen.contains(&key) {
                return Err(TodaError::Config(format!(
                    "line {}: duplicate key '{key}'",
                    lineno + 1
                )));
            }
            seen.push(key);
            match key {
                "n" => self.n = parse(key, value)?,
                "c" => self.c = parse(key, value)?,
                "dt" => self.dt = parse(key, value)?,
                "t_end" => self.t_end = parse(key, value)?,
                "seed" => self.seed = parse(key, value)?,
                "ic_mode" => self.ic_mode = value.parse()?,
                _ => self.outputs = PathBuf::from(value),
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::default().apply_text(text)
    }

    pub fn to_text(&self) -> String {
        format!(
            "n = {}\nc = {}\ndt = {}\nt_end = {}\nseed = {}\nic_mode = {}\noutputs = {}\n",
            self.n,
            self.c,
            self.dt,
            self.t_end,
            self.seed,
            self.ic_mode,
            self.outputs.display()
        )
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let cfg = ExperimentConfig {
            n: 7,
            c: -1.0,
            dt: 1e-3,
            t_end: 300.0,
            seed: 42,
            ic_mode: IcMode::NegativeUnitGaps,
            outputs: PathBuf::from("runs/a"),
        };
        assert_eq!(ExperimentConfig::from_text(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(ExperimentConfig::from_text("n = 4\nsteps = 3\n").is_err());
        assert!(ExperimentConfig::from_text("n = 4\nn = 5\n").is_err());
        assert!(ExperimentConfig::from_text("n 4\n").is_err());
        assert!(ExperimentConfig::from_text("ic_mode = wavy\n").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_text("n = 1").is_err());
        assert!(ExperimentConfig::from_text("dt = 0").is_err());
        assert!(ExperimentConfig::from_text("dt = 0.3\nt_end = 1").is_err());
        assert!(ExperimentConfig::from_text("# comment\n\nseed = 9").is_ok());
    }
}
