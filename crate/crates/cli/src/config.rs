//! Flat key-value experiment configuration.
//!
//! Format: first line `cuga-config v1`, then one `key value...` pair per
//! line. Lists are whitespace-separated. `#` starts a comment line.
//!
//! ```text
//! cuga-config v1
//! kind bounds_sweep
//! advertisers 10
//! channels 100
//! customers 10000
//! p_max 0.005 0.01 0.015 0.02
//! edges 5 10 20 30
//! seeds 1 2 3 4 5 6 7 8 9 10
//! out out/fig1a
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

/// Config-level error: carries the offending field for the exit-2 message.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    BoundsSweep,
    MaximizeCompare,
    Verify,
}

/// Which instance family `verify` builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyInstance {
    Sensor,
    Market,
    Affine,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Kind,
    // Market parameters (bounds_sweep, verify on market).
    pub advertisers: usize,
    pub channels: usize,
    pub customers: usize,
    pub p_max_sweep: Vec<f64>,
    pub edges_sweep: Vec<usize>,
    // Sensor parameters (maximize_compare, verify on sensor/affine).
    pub sensors: usize,
    pub locations: usize,
    pub p: f64,
    pub k_sweep: Vec<usize>,
    pub budget_sweep: Vec<f64>,
    pub budget_k: usize,
    pub step_scale: f64,
    // Verify parameters.
    pub instance: VerifyInstance,
    pub samples: usize,
    pub corrupt_payoff_scale: Option<f64>,
    pub affine_slope: f64,
    pub affine_base: f64,
    // Shared.
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

fn parse_list<T: std::str::FromStr>(field: &str, raw: &str) -> Result<Vec<T>, ConfigError> {
    raw.split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| err(field, format!("bad value `{t}`"))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(field: &str, raw: &str) -> Result<T, ConfigError> {
    let v: Vec<T> = parse_list(field, raw)?;
    if v.len() != 1 {
        return Err(err(field, "expected a single value"));
    }
    Ok(v.into_iter().next().unwrap())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some("cuga-config v1") => {}
            Some(other) => return Err(err("header", format!("expected `cuga-config v1`, got `{other}`"))),
            None => return Err(err("header", "empty config")),
        }
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        for line in lines {
            let (key, value) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            if map.insert(key, value.trim()).is_some() {
                return Err(err(key, "duplicate key"));
            }
        }

        let kind = match map.remove("kind") {
            Some("bounds_sweep") => Kind::BoundsSweep,
            Some("maximize_compare") => Kind::MaximizeCompare,
            Some("verify") => Kind::Verify,
            Some(other) => return Err(err("kind", format!("unknown kind `{other}`"))),
            None => return Err(err("kind", "missing")),
        };

        let mut cfg = ExperimentConfig {
            kind,
            advertisers: 10,
            channels: 100,
            customers: 10_000,
            p_max_sweep: vec![],
            edges_sweep: vec![],
            sensors: 5,
            locations: 30,
            p: 0.05,
            k_sweep: vec![],
            budget_sweep: vec![],
            budget_k: 3000,
            step_scale: 1.0,
            instance: VerifyInstance::Sensor,
            samples: 1000,
            corrupt_payoff_scale: None,
            affine_slope: 0.5,
            affine_base: 2.0,
            seeds: vec![],
            out: PathBuf::from("out"),
        };

        for (key, value) in map {
            match key {
                "advertisers" => cfg.advertisers = parse_one(key, value)?,
                "channels" => cfg.channels = parse_one(key, value)?,
                "customers" => cfg.customers = parse_one(key, value)?,
                "p_max" => cfg.p_max_sweep = parse_list(key, value)?,
                "edges" => cfg.edges_sweep = parse_list(key, value)?,
                "sensors" => cfg.sensors = parse_one(key, value)?,
                "locations" => cfg.locations = parse_one(key, value)?,
                "p" => cfg.p = parse_one(key, value)?,
                "k_sweep" => cfg.k_sweep = parse_list(key, value)?,
                "budget_sweep" => cfg.budget_sweep = parse_list(key, value)?,
                "budget_k" => cfg.budget_k = parse_one(key, value)?,
                "step_scale" => cfg.step_scale = parse_one(key, value)?,
                "instance" => {
                    cfg.instance = match value {
                        "sensor" => VerifyInstance::Sensor,
                        "market" => VerifyInstance::Market,
                        "affine" => VerifyInstance::Affine,
                        other => return Err(err(key, format!("unknown instance `{other}`"))),
                    }
                }
                "samples" => cfg.samples = parse_one(key, value)?,
                "corrupt_payoff_scale" => cfg.corrupt_payoff_scale = Some(parse_one(key, value)?),
                "affine_slope" => cfg.affine_slope = parse_one(key, value)?,
                "affine_base" => cfg.affine_base = parse_one(key, value)?,
                "seeds" => cfg.seeds = parse_list(key, value)?,
                "out" => cfg.out = PathBuf::from(value),
                other => return Err(err(other, "unknown key")),
            }
        }

        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds.is_empty() {
            return Err(err("seeds", "at least one seed required"));
        }
        match self.kind {
            Kind::BoundsSweep => {
                if self.p_max_sweep.is_empty() {
                    return Err(err("p_max", "sweep list must be nonempty"));
                }
                if self.edges_sweep.is_empty() {
                    return Err(err("edges", "sweep list must be nonempty"));
                }
                if self.p_max_sweep.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(err("p_max", "values must lie in [0, 1]"));
                }
                if self.edges_sweep.iter().any(|&e| e == 0 || e > self.channels) {
                    return Err(err("edges", "values must lie in [1, channels]"));
                }
                if self.advertisers == 0 || self.channels == 0 || self.customers == 0 {
                    return Err(err("advertisers", "market dimensions must be positive"));
                }
            }
            Kind::MaximizeCompare => {
                if self.k_sweep.is_empty() {
                    return Err(err("k_sweep", "sweep list must be nonempty"));
                }
                if self.k_sweep.iter().any(|&k| k == 0) {
                    return Err(err("k_sweep", "iteration counts must be positive"));
                }
                if self.budget_sweep.iter().any(|&b| b <= 0.0) {
                    return Err(err("budget_sweep", "budgets must be positive"));
                }
                if !(0.0..1.0).contains(&self.p) {
                    return Err(err("p", "detection probability must lie in [0, 1)"));
                }
                if self.sensors == 0 || self.locations == 0 {
                    return Err(err("sensors", "sensor dimensions must be positive"));
                }
                if self.step_scale <= 0.0 {
                    return Err(err("step_scale", "must be positive"));
                }
            }
            Kind::Verify => {
                if self.samples == 0 {
                    return Err(err("samples", "must be positive"));
                }
                if self.affine_base <= 0.0 {
                    return Err(err("affine_base", "must be positive"));
                }
            }
        }
        Ok(())
    }
}
