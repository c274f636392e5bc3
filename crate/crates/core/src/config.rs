//! Flat `section.key = value` configuration files.
//!
//! ```text
//! # comment
//! plasmon.gamma_p = 0.1
//! voltage.kappa_v = 0.02   # eV per volt
//! ```
//!
//! Keys mirror the field paths of [`SystemParams`] plus the `voltage.*` and
//! `units.*` sections. Unknown keys are errors.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::params::{default_params, validate, SystemParams, ValidationError, VoltageMap};

/// Every key accepted in a config file, in snapshot order.
pub const KEYS: &[&str] = &[
    "plasmon.omega_p",
    "plasmon.gamma_p",
    "plasmon.eps_drive",
    "emitter.omega_qe",
    "emitter.gamma_qe",
    "emitter.f_coupling",
    "emitter.inversion_y",
    "mech.omega_m",
    "mech.gamma_m",
    "mech.n_bar",
    "mech.g_single",
    "mech.x_zpf",
    "drive.omega",
    "voltage.kappa_v",
    "voltage.omega_qe_0",
    "units.reference_ev",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `section.key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownOverride(String),
    #[error("line {line}: `{key}` has non-numeric value `{value}`")]
    BadValue { line: usize, key: String, value: String },
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// System parameters plus the voltage map, as read from a config file.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Config {
    pub params: SystemParams,
    pub voltage: VoltageMap,
}

impl Config {
    pub fn defaults() -> Self {
        Self {
            params: default_params(),
            voltage: VoltageMap::default(),
        }
    }

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        let p = &mut self.params;
        Some(match key {
            "plasmon.omega_p" => &mut p.plasmon.omega_p,
            "plasmon.gamma_p" => &mut p.plasmon.gamma_p,
            "plasmon.eps_drive" => &mut p.plasmon.eps_drive,
            "emitter.omega_qe" => &mut p.emitter.omega_qe,
            "emitter.gamma_qe" => &mut p.emitter.gamma_qe,
            "emitter.f_coupling" => &mut p.emitter.f_coupling,
            "emitter.inversion_y" => &mut p.emitter.inversion_y,
            "mech.omega_m" => &mut p.mech.omega_m,
            "mech.gamma_m" => &mut p.mech.gamma_m,
            "mech.n_bar" => &mut p.mech.n_bar,
            "mech.g_single" => &mut p.mech.g_single,
            "mech.x_zpf" => &mut p.mech.x_zpf,
            "drive.omega" => &mut p.drive.omega,
            "units.reference_ev" => &mut p.scale.reference_ev,
            "voltage.kappa_v" => &mut self.voltage.kappa_v,
            "voltage.omega_qe_0" => &mut self.voltage.omega_qe_0,
            _ => return None,
        })
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(key).map(|v| *v)
    }

    /// Applies a `key=value` override, as given on the command line.
    pub fn set_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = split_assignment(assignment).ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: assignment.to_string(),
        })?;
        let parsed: f64 = value.parse().map_err(|_| ConfigError::BadValue {
            line: 0,
            key: key.to_string(),
            value: value.to_string(),
        })?;
        let slot = self
            .slot(key)
            .ok_or_else(|| ConfigError::UnknownOverride(key.to_string()))?;
        *slot = parsed;
        Ok(())
    }

    pub fn validate(self) -> Result<Self, ConfigError> {
        let mut report = match validate(self.params) {
            Ok(_) => ValidationError::default(),
            Err(e) => e,
        };
        if let Err(e) = self.voltage.validate() {
            report.violations.extend(e.violations);
        }
        if report.violations.is_empty() {
            Ok(self)
        } else {
            Err(report.into())
        }
    }

    /// Serializes every key; `parse_config(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            // {:?} on f64 is the shortest string that round-trips
            let _ = writeln!(out, "{key} = {:?}", self.get(key).unwrap_or(f64::NAN));
        }
        out
    }
}

fn split_assignment(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() || !k.contains('.') {
        return None;
    }
    Some((k, v))
}

/// Parses a config text on top of the defaults and validates the result.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut cfg = Config::defaults();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = split_assignment(content).ok_or_else(|| ConfigError::Syntax {
            line,
            text: raw.trim().to_string(),
        })?;
        let parsed: f64 = value.parse().map_err(|_| ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
        })?;
        match cfg.slot(key) {
            Some(slot) => *slot = parsed,
            None => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }
    cfg.validate()
}

pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}
