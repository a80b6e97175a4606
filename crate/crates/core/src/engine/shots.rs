// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Seeded shot sampling by statevector trajectories.
//!
//! Each shot is one pure-state trajectory with true mid-circuit collapse.
//! Shots are grouped in batches of [`SHOT_BATCH`]; batch `b` draws from
//! ChaCha8 seeded with the user seed on stream `b`, so the counts do not
//! depend on how many threads run the batches.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate, GateOp, Instruction};
use crate::exec::Exec;
use crate::linalg::{C64, ONE, ZERO};

use super::EngineError;

pub const SHOT_BATCH: u64 = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotResult {
    /// Classical register bitstring (highest clbit first) → occurrences.
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl ShotResult {
    pub fn frequency(&self, bits: &str) -> f64 {
        self.counts.get(bits).copied().unwrap_or(0) as f64 / self.shots as f64
    }

    /// Empirical distribution of the listed classical bits; `clbits[i]` is bit `i` of the key.
    pub fn marginal(&self, clbits: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << clbits.len()];
        for (bits, &n) in &self.counts {
            let chars: Vec<u8> = bits.bytes().rev().collect();
            let key = clbits.iter().enumerate().fold(0usize, |acc, (i, &c)| {
                acc | (usize::from(chars.get(c).copied() == Some(b'1')) << i)
            });
            out[key] += n as f64;
        }
        out.iter_mut().for_each(|x| *x /= self.shots as f64);
        out
    }
}

#[derive(Debug, Clone)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    pub fn zero_state(num_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[0] = ONE;
        Self { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        match &gate.op {
            GateOp::Single { qubit, matrix } => {
                let bit = 1usize << qubit;
                for i in (0..self.amps.len()).filter(|i| i & bit == 0) {
                    let (a, b) = (self.amps[i], self.amps[i | bit]);
                    self.amps[i] = matrix[0][0] * a + matrix[0][1] * b;
                    self.amps[i | bit] = matrix[1][0] * a + matrix[1][1] * b;
                }
            }
            GateOp::Pair { qubits, matrix } => {
                let (ba, bb) = (1usize << qubits[0], 1usize << qubits[1]);
                let offsets = [0, bb, ba, ba | bb];
                for i in (0..self.amps.len()).filter(|i| i & (ba | bb) == 0) {
                    let v = offsets.map(|o| self.amps[i | o]);
                    for (m, o) in offsets.iter().enumerate() {
                        self.amps[i | o] = (0..4).map(|l| matrix[m][l] * v[l]).sum();
                    }
                }
            }
        }
    }

    /// Projective Z measurement with collapse.
    pub fn measure(&mut self, qubit: usize, rng: &mut impl Rng) -> u8 {
        let bit = 1usize << qubit;
        let p1: f64 = self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum();
        let outcome = u8::from(rng.random::<f64>() < p1);
        let norm = if outcome == 1 { p1 } else { 1.0 - p1 }.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if ((i & bit != 0) as u8) == outcome {
                *a /= norm;
            } else {
                *a = ZERO;
            }
        }
        outcome
    }

    pub fn reset(&mut self, qubit: usize, rng: &mut impl Rng) {
        if self.measure(qubit, rng) == 1 {
            let bit = 1usize << qubit;
            for i in (0..self.amps.len()).filter(|i| i & bit == 0) {
                self.amps.swap(i, i | bit);
            }
        }
    }

    /// Runs one trajectory and returns the classical register.
    pub fn run_shot(circuit: &Circuit, rng: &mut impl Rng) -> Vec<u8> {
        let mut psi = Self::zero_state(circuit.num_qubits());
        let mut clbits = vec![0u8; circuit.num_clbits()];
        for instr in circuit.instructions() {
            match instr {
                Instruction::Gate(g) => psi.apply_gate(g),
                Instruction::Measure { qubit, clbit } => clbits[*clbit] = psi.measure(*qubit, rng),
                Instruction::Reset { qubit } => psi.reset(*qubit, rng),
                Instruction::Conditional { clbit, gate } => {
                    if clbits[*clbit] == 1 {
                        psi.apply_gate(gate);
                    }
                }
                Instruction::Barrier { .. } => {}
            }
        }
        clbits
    }
}

fn bitstring(bits: &[u8]) -> String {
    bits.iter().rev().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

/// Samples `shots` runs of `circuit` from |0…0⟩.
pub fn sample_shots(circuit: &Circuit, shots: u64, seed: u64) -> Result<ShotResult, EngineError> {
    sample_shots_with(circuit, shots, seed, Exec::default())
}

pub fn sample_shots_with(circuit: &Circuit, shots: u64, seed: u64, exec: Exec) -> Result<ShotResult, EngineError> {
    if shots == 0 {
        return Err(EngineError::NoShots);
    }
    let batches: Vec<u64> = (0..shots.div_ceil(SHOT_BATCH)).collect();
    let partial = exec.map(&batches, |&b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b);
        let n = SHOT_BATCH.min(shots - b * SHOT_BATCH);
        let mut counts = BTreeMap::<String, u64>::new();
        for _ in 0..n {
            *counts.entry(bitstring(&Statevector::run_shot(circuit, &mut rng))).or_default() += 1;
        }
        counts
    });
    let mut counts = BTreeMap::new();
    for part in partial {
        for (k, v) in part {
            *counts.entry(k).or_default() += v;
        }
    }
    Ok(ShotResult { counts, shots, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_counts_only_on_correlated_outcomes() {
        let mut c = Circuit::new(2, 2);
        c.h(0).unwrap().cx(0, 1).unwrap().measure(0, 0).unwrap().measure(1, 1).unwrap();
        let r = sample_shots(&c, 4096, 7).unwrap();
        assert_eq!(r.counts.values().sum::<u64>(), 4096);
        assert!(r.counts.keys().all(|k| k == "00" || k == "11"));
        assert_eq!(r.seed, 7);
    }

    #[test]
    fn deterministic_outcome() {
        let mut c = Circuit::new(1, 1);
        c.x(0).unwrap().measure(0, 0).unwrap();
        let r = sample_shots(&c, 100, 3).unwrap();
        assert_eq!(r.counts.get("1"), Some(&100));
    }

    #[test]
    fn plus_state_frequency_within_binomial_bound() {
        let mut c = Circuit::new(1, 1);
        c.h(0).unwrap().measure(0, 0).unwrap();
        let r = sample_shots(&c, 4096, 11).unwrap();
        let bound = 3.0 * (0.25f64 / 4096.0).sqrt();
        assert!((r.frequency("0") - 0.5).abs() <= bound);
    }

    #[test]
    fn seed_determinism_is_independent_of_exec_mode() {
        let mut c = Circuit::new(2, 2);
        c.h(0).unwrap().h(1).unwrap().measure(0, 0).unwrap().measure(1, 1).unwrap();
        let a = sample_shots_with(&c, 1000, 5, Exec::Sequential).unwrap();
        let b = sample_shots_with(&c, 1000, 5, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        let other = sample_shots_with(&c, 1000, 6, Exec::Sequential).unwrap();
        assert_ne!(a.counts, other.counts);
    }

    #[test]
    fn zero_shots_rejected() {
        let c = Circuit::new(1, 0);
        assert!(matches!(sample_shots(&c, 0, 1), Err(EngineError::NoShots)));
    }

    #[test]
    fn reset_returns_to_zero() {
        let mut c = Circuit::new(1, 1);
        c.h(0).unwrap().reset(0).unwrap().measure(0, 0).unwrap();
        let r = sample_shots(&c, 300, 9).unwrap();
        assert_eq!(r.counts.get("0"), Some(&300));
    }

    #[test]
    fn marginal_reads_selected_bits() {
        let mut c = Circuit::new(2, 2);
        c.x(1).unwrap().measure(0, 0).unwrap().measure(1, 1).unwrap();
        let r = sample_shots(&c, 10, 1).unwrap();
        assert_eq!(r.marginal(&[1]), vec![0.0, 1.0]);
        assert_eq!(r.marginal(&[0, 1]), vec![0.0, 0.0, 1.0, 0.0]);
    }
}
