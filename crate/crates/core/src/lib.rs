// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Emulation of a quantum data center: fiber-linked QPUs carved out of one
//! simulated register, with collision-model interconnect noise, remote gates,
//! and distributed Grover / QFT workloads.

pub mod algorithms;
pub mod circuit;
pub mod engine;
pub mod exec;
pub mod linalg;
pub mod noise;
pub mod remote;
pub mod runner;
pub mod tomography;
pub mod topology;

pub use circuit::{Circuit, Gate, Instruction, StandardGate};
pub use engine::{evolve_exact, sample_shots, DensityMatrix, ShotResult};
pub use exec::Exec;
pub use noise::{FiberType, NoiseLinkSpec};
