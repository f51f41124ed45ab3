//! Flat `dotted.key = value` configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment
//! scenario = fig1
//! packet.dp = 0.01
//! sweep.targets = 0.87, 2, 5, 14.9
//! ```
//!
//! Blank lines and `#` comments are ignored, keys are case-sensitive, and a key
//! may appear at most once per file. Lists are comma separated.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Positive,
    NonNegative,
    Real,
    Count,
    Flag,
    Text,
    Reals,
    Counts,
}

/// (key, default, kind)
const KEYS: &[(&str, &str, Kind)] = &[
    ("scenario", "", Kind::Text),
    ("output.dir", "out", Kind::Text),
    ("output.format", "csv", Kind::Text),
    ("potential.depth", "0.1026", Kind::Positive),
    ("potential.alpha", "0.72", Kind::Positive),
    ("potential.r_eq", "2.0", Kind::Positive),
    ("potential.proton_mass", "1836.152672", Kind::Positive),
    ("grid.r_min", "0.2", Kind::Positive),
    ("grid.r_max", "40.0", Kind::Positive),
    ("grid.dr", "0.01", Kind::Positive),
    ("continuum.tolerance", "1e-6", Kind::Positive),
    ("continuum.min_radius", "0.0", Kind::NonNegative),
    ("continuum.energies", "0.05, 0.1, 0.2, 0.4, 0.8", Kind::Reals),
    ("continuum.l_values", "1, 3, 5, 7, 9", Kind::Counts),
    ("spectrum.e_max", "0.8", Kind::Positive),
    ("spectrum.n_energy", "160", Kind::Count),
    ("partial_waves.l_start", "9", Kind::Count),
    ("partial_waves.l_cap", "41", Kind::Count),
    ("partial_waves.tolerance", "0.01", Kind::Positive),
    ("quadrature.angular_nodes", "32", Kind::Count),
    ("quadrature.packet_nodes", "16", Kind::Count),
    ("quadrature.phi_points", "72", Kind::Count),
    ("quadrature.refine", "true", Kind::Flag),
    ("state.nu1", "0", Kind::Count),
    ("state.nu2", "1", Kind::Count),
    ("state.p1", "4.0", Kind::Real),
    ("state.P1", "0.0", Kind::Real),
    ("state.phi", "0.0", Kind::Real),
    ("state.c1", "0.7071067811865476", Kind::Real),
    ("state.c2", "0.7071067811865476", Kind::Real),
    ("envelope.nu_max", "17", Kind::Count),
    ("envelope.k0", "4.0", Kind::Positive),
    ("envelope.max_center", "18.0", Kind::Real),
    ("envelope.max_width", "1.8", Kind::Positive),
    ("envelope.min_center", "7.0", Kind::Real),
    ("envelope.min_width", "6.0", Kind::Positive),
    ("map.r_min", "0.5", Kind::Positive),
    ("map.r_max", "12.0", Kind::Positive),
    ("map.n_r", "116", Kind::Count),
    ("map.x_min", "-10.0", Kind::Real),
    ("map.x_max", "10.0", Kind::Real),
    ("map.n_x", "101", Kind::Count),
    ("packet.p0", "4.0", Kind::Real),
    ("packet.dp", "0.01", Kind::Positive),
    ("packet.P0", "0.0", Kind::Real),
    ("packet.dP", "1.0", Kind::Positive),
    ("packet.tau_d", "0.0", Kind::Real),
    ("timing.measure", "density", Kind::Text),
    ("timing.points", "2048", Kind::Count),
    ("timing.span", "20.0", Kind::Positive),
    ("sweep.methods", "shrink_dp, offset_focus", Kind::Text),
    ("sweep.targets", "0.87, 2, 5, 10, 14.9, 20", Kind::Reals),
    ("thermal.temperatures", "0, 1000, 3000, 10000, 30000", Kind::Reals),
    ("thermal.nu_max", "18", Kind::Count),
    ("thermal.k", "4.0", Kind::Positive),
    ("custom.state", "two_state", Kind::Text),
];

pub const SCENARIOS: &[&str] = &["bound", "continuum", "fig1", "fig2", "fig3b", "fig3c", "thermal", "custom"];

fn lookup(key: &str) -> Option<(&'static str, Kind)> {
    KEYS.iter().find(|(k, _, _)| *k == key).map(|(_, d, kind)| (*d, *kind))
}

/// Fully resolved configuration: defaults, then the file, then overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
    /// Raw bytes of the configuration file, if one was read.
    pub source: Option<(String, Vec<u8>)>,
}

fn parse_line(line: &str, n: usize) -> Result<Option<(String, String)>, CliError> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("line {n}: expected key = value")))?;
    let key = k.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("line {n}: empty key")));
    }
    Ok(Some((key.to_string(), v.trim().to_string())))
}

impl Config {
    pub fn defaults() -> Self {
        Config {
            values: KEYS.iter().map(|(k, d, _)| (k.to_string(), d.to_string())).collect(),
            source: None,
        }
    }

    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::defaults();
        let mut seen = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if let Some((k, v)) = parse_line(line, i + 1)? {
                if seen.contains(&k) {
                    return Err(CliError::Config(format!("line {}: duplicate key '{k}'", i + 1)));
                }
                seen.push(k.clone());
                cfg.set(&k, &v)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Config(format!("{}: not UTF-8", path.display())))?;
        let mut cfg = Self::from_text(&text)?;
        cfg.source = Some((path.display().to_string(), bytes));
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if lookup(key).is_none() {
            return Err(CliError::Config(format!("unknown key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override '{pair}' is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key '{key}' not declared"))
    }

    pub fn text(&self, key: &str) -> &str {
        self.raw(key)
    }

    pub fn real(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self
            .raw(key)
            .parse()
            .map_err(|_| CliError::Config(format!("{key}: '{}' is not a number", self.raw(key))))?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("{key} must be finite")));
        }
        match lookup(key).map(|(_, k)| k) {
            Some(Kind::Positive) if v <= 0.0 => Err(CliError::Config(format!("{key} must be positive, got {v}"))),
            Some(Kind::NonNegative) if v < 0.0 => {
                Err(CliError::Config(format!("{key} must be nonnegative, got {v}")))
            }
            _ => Ok(v),
        }
    }

    pub fn count(&self, key: &str) -> Result<usize, CliError> {
        self.raw(key)
            .parse()
            .map_err(|_| CliError::Config(format!("{key}: '{}' is not a nonnegative integer", self.raw(key))))
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(CliError::Config(format!("{key}: '{other}' is not a boolean"))),
        }
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        self.raw(key)
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect()
    }

    pub fn reals(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.list(key)
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Config(format!("{key}: '{s}' is not a number")))
            })
            .collect()
    }

    pub fn counts(&self, key: &str) -> Result<Vec<usize>, CliError> {
        self.list(key)
            .iter()
            .map(|s| s.parse().map_err(|_| CliError::Config(format!("{key}: '{s}' is not an integer"))))
            .collect()
    }

    /// Parses every key so that type and sign errors surface before any computation.
    pub fn check(&self) -> Result<(), CliError> {
        for (key, _, kind) in KEYS {
            match kind {
                Kind::Positive | Kind::NonNegative | Kind::Real => {
                    self.real(key)?;
                }
                Kind::Count => {
                    self.count(key)?;
                }
                Kind::Flag => {
                    self.flag(key)?;
                }
                Kind::Reals => {
                    self.reals(key)?;
                }
                Kind::Counts => {
                    self.counts(key)?;
                }
                Kind::Text => {}
            }
        }
        let scenario = self.text("scenario");
        if !scenario.is_empty() && !SCENARIOS.contains(&scenario) {
            return Err(CliError::Config(format!(
                "scenario: unknown '{scenario}' (expected one of {})",
                SCENARIOS.join(", ")
            )));
        }
        if !matches!(self.text("output.format"), "csv" | "json") {
            return Err(CliError::Config("output.format must be csv or json".into()));
        }
        if !matches!(self.text("custom.state"), "two_state" | "packet" | "single") {
            return Err(CliError::Config("custom.state must be two_state, packet or single".into()));
        }
        if self.real("grid.r_max")? <= self.real("grid.r_min")? {
            return Err(CliError::Config("grid.r_max must exceed grid.r_min".into()));
        }
        for key in ["quadrature.phi_points", "spectrum.n_energy", "map.n_r", "map.n_x", "timing.points"] {
            if self.count(key)? < 3 {
                return Err(CliError::Config(format!("{key} must be at least 3")));
            }
        }
        for key in ["sweep.targets", "continuum.energies"] {
            let v = self.reals(key)?;
            if v.is_empty() || v.iter().any(|x| *x <= 0.0) {
                return Err(CliError::Config(format!("{key} must list positive values")));
            }
        }
        if self.reals("thermal.temperatures")?.iter().any(|t| *t < 0.0) {
            return Err(CliError::Config("thermal.temperatures must be nonnegative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Config::defaults().check().unwrap();
    }

    #[test]
    fn file_and_override_layering() {
        let mut c = Config::from_text("# comment\nscenario = fig1\n\npacket.dp = 0.02\n").unwrap();
        assert_eq!(c.text("scenario"), "fig1");
        assert_eq!(c.real("packet.dp").unwrap(), 0.02);
        c.apply_override("packet.dp=0.03").unwrap();
        assert_eq!(c.real("packet.dp").unwrap(), 0.03);
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        assert!(matches!(Config::from_text("packet.width = 1"), Err(CliError::Config(_))));
        assert!(matches!(Config::from_text("grid.dr = 0.01\ngrid.dr = 0.02"), Err(CliError::Config(_))));
        assert!(matches!(Config::from_text("just words"), Err(CliError::Config(_))));
    }

    #[test]
    fn negative_width_names_the_key() {
        let c = Config::from_text("packet.dp = -0.01").unwrap();
        match c.check() {
            Err(CliError::Config(msg)) => assert!(msg.contains("packet.dp"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lists_parse() {
        let c = Config::from_text("sweep.targets = 1, 2.5 ,3").unwrap();
        assert_eq!(c.reals("sweep.targets").unwrap(), vec![1.0, 2.5, 3.0]);
        let bad = Config::from_text("continuum.l_values = 1, x").unwrap();
        assert!(bad.check().is_err());
    }
}
