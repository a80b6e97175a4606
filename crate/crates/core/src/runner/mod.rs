// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Configuration-driven sweeps over fiber type and fiber steps.
//!
//! Step `s ≥ 1` runs the distributed circuit with `fiber_steps = s` on top of
//! the configured transducer collisions. Step 0 is the noiseless baseline:
//! the monolithic circuit for Grover and QFT, a noiseless link otherwise.

mod config;
mod csv_out;
pub mod qasm;

use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::algorithms::{self, AlgorithmCircuit, AlgorithmError, AlgorithmKind, AlgorithmSpec, Layout};
use crate::circuit::{Circuit, CircuitError};
use crate::engine::{evolve_exact, sample_shots_with, EngineError};
use crate::exec::Exec;
use crate::noise::{FiberType, NoiseError, NoiseLinkSpec};
use crate::remote::{self, Protocol, RemoteCnotLayout, RemoteError};
use crate::tomography::{self, TomographyError};

pub use config::{ConfigError, Experiment, ExperimentConfig, OutputPaths, ShotsMode};
pub use csv_out::{export_csv, format_sig6, read_csv, write_csv, CSV_HEADER};
pub use qasm::{export_qasm, to_qasm};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("unsupported instruction: {0}")]
    UnsupportedInstruction(String),
    #[error("record {index} is inconsistent: {reason}")]
    InconsistentRecord { index: usize, reason: String },
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Tomography(#[from] TomographyError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    pub protocol: String,
    pub control_init: Option<u8>,
    pub fiber_type: String,
    pub alpha: f64,
    pub kappa_t: f64,
    pub kappa_f: f64,
    pub dt: f64,
    pub steps: u32,
    pub distance_km: f64,
    pub mode: String,
    pub shots: Option<u64>,
    pub seed: u64,
    pub metric_name: String,
    pub metric_value: f64,
    pub stderr: Option<f64>,
}

/// A single (fiber, steps) point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub fiber: FiberType,
    pub steps: u32,
}

impl SweepPoint {
    /// Link noise for this point; step 0 is noiseless.
    pub fn noise(&self, template: &NoiseLinkSpec) -> NoiseLinkSpec {
        let spec = template.clone().with_fiber(self.fiber.clone());
        if self.steps == 0 {
            NoiseLinkSpec { transducer_collisions: 0, fiber_steps: 0, ..spec }
        } else {
            spec.with_steps(self.steps)
        }
    }
}

/// `seed ⊕ first 8 bytes of SHA-256("fiber:steps")`.
pub fn point_seed(seed: u64, fiber: &FiberType, steps: u32) -> u64 {
    let digest = Sha256::digest(format!("{}:{}", fiber.name(), steps).as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(bytes)
}

fn experiment_id(exp: &Experiment) -> String {
    match exp {
        Experiment::RemoteCnot { .. } => "remote_cnot".into(),
        Experiment::CrossBell => "cross_bell".into(),
        Experiment::Grover { marked } => format!("grover_{marked}"),
        Experiment::Qft { input } => format!("qft_{input}"),
    }
}

/// Circuit for one sweep point, with terminal measurements of the outputs.
pub fn point_circuit(config: &ExperimentConfig, point: &SweepPoint) -> Result<Circuit, RunnerError> {
    let noise = point.noise(&config.noise);
    match &config.experiment {
        Experiment::RemoteCnot { protocol, control_init } => {
            let (mut c, out) = RemoteCnotLayout::new().remote_cnot_circuit(*protocol, *control_init, &noise)?;
            c.measure_fresh(out.control_out)?;
            c.measure_fresh(out.target)?;
            Ok(c)
        }
        _ => {
            let a = algorithm_for(config, point)?;
            let mut c = a.circuit;
            for &q in a.register.iter().rev() {
                c.measure_fresh(q)?;
            }
            Ok(c)
        }
    }
}

fn algorithm_for(config: &ExperimentConfig, point: &SweepPoint) -> Result<AlgorithmCircuit, RunnerError> {
    let noise = point.noise(&config.noise);
    let monolithic_baseline = point.steps == 0;
    let kind = match &config.experiment {
        Experiment::RemoteCnot { .. } => unreachable!("remote_cnot has no algorithm circuit"),
        Experiment::CrossBell => AlgorithmKind::CrossQpuBell,
        Experiment::Grover { marked } => AlgorithmKind::Grover2 { marked: marked.clone() },
        Experiment::Qft { input } => AlgorithmKind::Qft { n: algorithms::DISTRIBUTED_QFT_QUBITS, input: *input },
    };
    let layout = if monolithic_baseline && !matches!(kind, AlgorithmKind::CrossQpuBell) {
        Layout::Monolithic
    } else {
        Layout::Distributed(algorithms::DistributedOptions { noise, batched_cat: config.batched_cat })
    };
    Ok(AlgorithmSpec { kind, layout }.build()?)
}

struct Metric {
    name: String,
    value: f64,
    stderr: Option<f64>,
    protocol: String,
}

fn binomial_stderr(p: f64, shots: u64) -> f64 {
    (p * (1.0 - p) / shots as f64).sqrt()
}

fn evaluate(config: &ExperimentConfig, point: &SweepPoint, seed: u64, exec: Exec) -> Result<Vec<Metric>, RunnerError> {
    let noise = point.noise(&config.noise);
    let shots = match config.shots {
        ShotsMode::Exact => None,
        ShotsMode::Count(n) => Some(n),
    };
    let metric = |name: &str, value: f64, protocol: &str| Metric {
        name: name.into(),
        value,
        stderr: shots.map(|n| binomial_stderr(value, n)),
        protocol: protocol.into(),
    };
    match &config.experiment {
        Experiment::RemoteCnot { protocol, control_init } => {
            let p = match shots {
                None => remote::success_probability(*protocol, *control_init, &noise)?,
                Some(n) => remote::success_probability_shots(*protocol, *control_init, &noise, n, seed)?,
            };
            Ok(vec![metric("success_probability", p, protocol.name())])
        }
        experiment => {
            let a = algorithm_for(config, point)?;
            let protocol = if a.remote_gates == 0 { "monolithic" } else { Protocol::CatComm.name() };
            let probs = |a: &AlgorithmCircuit| -> Result<Vec<f64>, RunnerError> {
                match shots {
                    None => Ok(a.output_state(&evolve_exact(&a.circuit, None)?)?.probabilities()),
                    Some(n) => {
                        let mut c = a.circuit.clone();
                        let bits: Vec<usize> = a.register.iter().map(|&q| c.measure_fresh(q)).collect::<Result<_, _>>()?;
                        Ok(sample_shots_with(&c, n, seed, exec)?.marginal(&bits))
                    }
                }
            };
            match experiment {
                Experiment::CrossBell => {
                    let p = probs(&a)?;
                    Ok(vec![metric("p00", p[0], protocol), metric("p11", p[3], protocol)])
                }
                Experiment::Grover { marked } => {
                    let p = probs(&a)?;
                    Ok(vec![metric("p_marked", p[algorithms::parse_marked(marked)?], protocol)])
                }
                Experiment::Qft { input } => {
                    let state = a.output_state(&evolve_exact(&a.circuit, None)?)?;
                    let data = match shots {
                        None => tomography::exact_data(&state, exec)?,
                        Some(n) => tomography::sample_data(&state, n, seed, exec)?,
                    };
                    if let Some(dir) = &config.output.tomography_dir {
                        let file = dir.join(format!("{}_{}_{}.json", experiment_id(experiment), point.fiber.name(), point.steps));
                        std::fs::write(&file, data.to_json()).map_err(|e| RunnerError::Io(format!("{}: {e}", file.display())))?;
                    }
                    let rho_hat = tomography::reconstruct(&data)?.rho_hat;
                    let ideal = algorithms::qft_ideal_state(algorithms::DISTRIBUTED_QFT_QUBITS, *input);
                    let f = tomography::fidelity(&ideal, &rho_hat)?;
                    Ok(vec![Metric { name: "fidelity".into(), value: f, stderr: None, protocol: protocol.into() }])
                }
                Experiment::RemoteCnot { .. } => unreachable!(),
            }
        }
    }
}

/// Runs every (fiber, steps) point of the sweep.
///
/// Points run concurrently on up to `config.workers` threads; records are
/// sorted by (experiment, fiber_type, steps, metric_name).
pub fn run(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, RunnerError> {
    run_with(config, Exec::default())
}

pub fn run_with(config: &ExperimentConfig, exec: Exec) -> Result<Vec<ExperimentRecord>, RunnerError> {
    let fibers = config.validate()?;
    if let Some(dir) = &config.output.tomography_dir {
        std::fs::create_dir_all(dir).map_err(|e| RunnerError::Io(format!("{}: {e}", dir.display())))?;
    }
    let [lo, hi] = config.steps_range;
    let points: Vec<SweepPoint> =
        fibers.iter().flat_map(|f| (lo..=hi).map(move |steps| SweepPoint { fiber: f.clone(), steps })).collect();
    let id = experiment_id(&config.experiment);
    let results = exec.with_workers(config.workers, || {
        exec.map(&points, |point| -> Result<Vec<ExperimentRecord>, RunnerError> {
            let (mode, shots, seed) = match config.shots {
                ShotsMode::Exact => ("exact", None, config.seed),
                ShotsMode::Count(n) => ("shots", Some(n), point_seed(config.seed, &point.fiber, point.steps)),
            };
            let noise = point.noise(&config.noise);
            let distance_km = noise.distance_km()?;
            let control_init = match config.experiment {
                Experiment::RemoteCnot { control_init, .. } => Some(control_init),
                _ => None,
            };
            Ok(evaluate(config, point, seed, exec)?
                .into_iter()
                .map(|m| ExperimentRecord {
                    experiment_id: id.clone(),
                    protocol: m.protocol,
                    control_init,
                    fiber_type: point.fiber.name().to_string(),
                    alpha: point.fiber.alpha(),
                    kappa_t: noise.kappa_transducer,
                    kappa_f: noise.kappa_fiber,
                    dt: noise.dt,
                    steps: point.steps,
                    distance_km,
                    mode: mode.into(),
                    shots,
                    seed,
                    metric_name: m.name,
                    metric_value: m.value,
                    stderr: m.stderr,
                })
                .collect())
        })
    });
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    records.sort_by(|a, b| {
        (&a.experiment_id, &a.fiber_type, a.steps, &a.metric_name).cmp(&(&b.experiment_id, &b.fiber_type, b.steps, &b.metric_name))
    });
    Ok(records)
}

/// Loads a config file, reporting parse problems as configuration errors.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("$", format!("{}: {e}", path.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(catalog) = &config.fiber_catalog {
        if catalog.is_relative() {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            config.fiber_catalog = Some(base.join(catalog));
        }
    }
    Ok(config)
}
