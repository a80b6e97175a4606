// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Density-matrix evolution, shot sampling, and channel (Choi) utilities.

mod density;
mod exact;
mod shots;

pub mod choi;

use thiserror::Error;

pub use density::{DensityMatrix, PauliString, HERMITIAN_TOL, MAX_QUBITS, MIN_EIGEN_TOL, TRACE_TOL};
pub use exact::{evolve_exact, evolve_exact_inspect, evolve_operator};
pub use shots::{sample_shots, sample_shots_with, ShotResult, Statevector, SHOT_BATCH};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("state has {got} qubits, circuit expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("partial trace needs at least one kept qubit")]
    EmptyKeepSet,
    #[error("bad Pauli string `{0}`")]
    BadPauliString(String),
    #[error("Kraus set is not trace preserving (‖ΣK†K − I‖ = {defect:.3e})")]
    NonTracePreservingSet { defect: f64 },
    #[error("qubit {qubit} outside a {num_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("{0} qubits exceeds the dense-engine ceiling")]
    TooManyQubits(usize),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("shot count must be at least 1")]
    NoShots,
}
