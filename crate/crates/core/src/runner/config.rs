// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::PathBuf;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::algorithms::{parse_marked, DISTRIBUTED_QFT_QUBITS};
use crate::noise::{FiberCatalog, FiberType, NoiseLinkSpec};
use crate::remote::Protocol;

/// A configuration problem, located by a JSON-style field path.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config error at {path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    RemoteCnot { protocol: Protocol, control_init: u8 },
    CrossBell,
    Grover { marked: String },
    Qft {
        #[serde(default)]
        input: usize,
    },
}

/// `"exact"` or a positive shot count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShotsMode {
    #[default]
    Exact,
    Count(u64),
}

impl Serialize for ShotsMode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ShotsMode::Exact => s.serialize_str("exact"),
            ShotsMode::Count(n) => s.serialize_u64(*n),
        }
    }
}

impl<'de> Deserialize<'de> for ShotsMode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = ShotsMode;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"exact\" or a shot count")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<ShotsMode, E> {
                if v == "exact" {
                    Ok(ShotsMode::Exact)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ShotsMode, E> {
                Ok(ShotsMode::Count(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ShotsMode, E> {
                Err(E::invalid_value(de::Unexpected::Signed(v), &self))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    /// Directory for per-point tomography dumps (QFT only).
    pub tomography_dir: Option<PathBuf>,
}

fn default_fibers() -> Vec<String> {
    FiberType::BUILTIN.iter().map(|f| f.name().to_string()).collect()
}

fn default_steps() -> [u32; 2] {
    [1, 10]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub noise: NoiseLinkSpec,
    #[serde(default = "default_fibers")]
    pub fiber_types: Vec<String>,
    #[serde(default = "default_steps")]
    pub steps_range: [u32; 2],
    #[serde(default)]
    pub shots: ShotsMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: OutputPaths,
    /// Extra `{name → alpha_per_km}` table consulted for fiber names.
    #[serde(default)]
    pub fiber_catalog: Option<PathBuf>,
    /// Share one Bell pair across consecutive remote gates with a common control.
    #[serde(default)]
    pub batched_cat: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(if path == "." { "$".into() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Checks every field and resolves the fiber list.
    pub fn validate(&self) -> Result<Vec<FiberType>, ConfigError> {
        match &self.experiment {
            Experiment::RemoteCnot { control_init, .. } if *control_init > 1 => {
                return Err(ConfigError::new("experiment.control_init", "must be 0 or 1"));
            }
            Experiment::Grover { marked } if parse_marked(marked).is_err() => {
                return Err(ConfigError::new("experiment.marked", format!("`{marked}` is not one of 00, 01, 10, 11")));
            }
            Experiment::Qft { input } if *input >= 1 << DISTRIBUTED_QFT_QUBITS => {
                return Err(ConfigError::new("experiment.input", format!("{input} does not fit in {DISTRIBUTED_QFT_QUBITS} qubits")));
            }
            _ => {}
        }
        let n = &self.noise;
        for (field, value) in [("kappa_transducer", n.kappa_transducer), ("kappa_fiber", n.kappa_fiber)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(ConfigError::new(format!("noise.{field}"), format!("must be a finite non-negative number, got {value}")));
            }
        }
        if !(n.dt > 0.0) || !n.dt.is_finite() {
            return Err(ConfigError::new("noise.dt", format!("must be positive, got {}", n.dt)));
        }
        let [lo, hi] = self.steps_range;
        if lo > hi {
            return Err(ConfigError::new("steps_range", format!("min {lo} exceeds max {hi}")));
        }
        if self.shots == ShotsMode::Count(0) {
            return Err(ConfigError::new("shots", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(ConfigError::new("workers", "must be at least 1"));
        }
        if self.fiber_types.is_empty() {
            return Err(ConfigError::new("fiber_types", "at least one fiber type is required"));
        }
        let catalog = match &self.fiber_catalog {
            Some(path) => FiberCatalog::load(path).map_err(|e| ConfigError::new("fiber_catalog", e.to_string()))?,
            None => FiberCatalog::default(),
        };
        let mut fibers = Vec::with_capacity(self.fiber_types.len());
        for (i, name) in self.fiber_types.iter().enumerate() {
            let fiber = catalog.resolve(name).map_err(|e| ConfigError::new(format!("fiber_types[{i}]"), e.to_string()))?;
            if fibers.iter().any(|f: &FiberType| f.name() == fiber.name()) {
                return Err(ConfigError::new(format!("fiber_types[{i}]"), format!("`{name}` duplicates an earlier entry")));
            }
            fibers.push(fiber);
        }
        Ok(fibers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::from_json(text)
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse(r#"{"experiment":{"kind":"cross_bell"}}"#).unwrap();
        assert_eq!(c.steps_range, [1, 10]);
        assert_eq!(c.shots, ShotsMode::Exact);
        assert_eq!(c.noise, NoiseLinkSpec::default());
        assert_eq!(c.validate().unwrap(), FiberType::BUILTIN.to_vec());
        assert_eq!(parse(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn errors_carry_field_paths() {
        let e = parse(r#"{"experiment":{"kind":"grover","marked":"00"},"noise":{"kappa_fiber":"x"}}"#).unwrap_err();
        assert_eq!(e.path, "noise.kappa_fiber");
        let e = parse(r#"{"experiment":{"kind":"grover","marked":"00"},"shots":"many"}"#).unwrap_err();
        assert_eq!(e.path, "shots");
        let e = parse(r#"{"experiment":{"kind":"grover","marked":"0"}}"#).unwrap().validate().unwrap_err();
        assert_eq!(e.path, "experiment.marked");
        let e = parse(r#"{"experiment":{"kind":"qft"},"steps_range":[4,2]}"#).unwrap().validate().unwrap_err();
        assert_eq!(e.path, "steps_range");
        let e = parse(r#"{"experiment":{"kind":"qft"},"fiber_types":["G652D","fancy"]}"#).unwrap().validate().unwrap_err();
        assert_eq!(e.path, "fiber_types[1]");
        let e = parse(r#"{"experiment":{"kind":"qft"},"shots":0}"#).unwrap().validate().unwrap_err();
        assert_eq!(e.path, "shots");
        let e = parse(r#"{"experiment":{"kind":"qft"},"noise":{"kappa_fiber":-1}}"#).unwrap().validate().unwrap_err();
        assert_eq!(e.path, "noise.kappa_fiber");
        let e = parse(r#"{"experiment":{"kind":"qft"},"typo":1}"#).unwrap_err();
        assert_eq!(e.path, "typo");
    }

    #[test]
    fn aliases_resolve() {
        let c = parse(r#"{"experiment":{"kind":"qft"},"fiber_types":["G-654-E","g.652.d"]}"#).unwrap();
        assert_eq!(c.validate().unwrap(), vec![FiberType::G654D, FiberType::G652D]);
    }
}
