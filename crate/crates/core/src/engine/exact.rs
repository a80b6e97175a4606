// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exact density-matrix evolution with mid-circuit measurement.
//!
//! The evolving state is an ensemble of unnormalised branches keyed by the
//! values of the classical bits that some later `Conditional` still reads.
//! A measurement whose bit is never read only dephases; otherwise each branch
//! splits in two. Once the last reader of a bit has executed, branches that
//! differ only in that bit are summed back together, so the ensemble stays
//! small (two or four branches for the protocols in this crate) while the
//! result is identical to enumerating every measurement record.

use std::collections::BTreeMap;

use crate::circuit::{Circuit, Instruction};

use super::{DensityMatrix, EngineError};

type BitKey = Vec<(usize, u8)>;

struct Ensemble {
    branches: BTreeMap<BitKey, DensityMatrix>,
}

impl Ensemble {
    fn new(initial: DensityMatrix) -> Self {
        let mut branches = BTreeMap::new();
        branches.insert(Vec::new(), initial);
        Self { branches }
    }

    fn step(&mut self, instr: &Instruction, bit_is_read: bool) {
        match instr {
            Instruction::Gate(g) => self.branches.values_mut().for_each(|rho| rho.apply_gate(g)),
            Instruction::Reset { qubit } => self.branches.values_mut().for_each(|rho| rho.reset(*qubit)),
            Instruction::Barrier { .. } => {}
            Instruction::Measure { qubit, .. } if !bit_is_read => {
                self.branches.values_mut().for_each(|rho| rho.dephase(*qubit));
            }
            Instruction::Measure { qubit, clbit } => {
                let old = std::mem::take(&mut self.branches);
                for (key, rho) in old {
                    for bit in 0..2u8 {
                        let mut branch = rho.clone();
                        branch.project(*qubit, bit as usize);
                        let mut k = key.clone();
                        k.push((*clbit, bit));
                        k.sort_unstable();
                        self.branches.insert(k, branch);
                    }
                }
            }
            Instruction::Conditional { clbit, gate } => {
                for (key, rho) in self.branches.iter_mut() {
                    if key.contains(&(*clbit, 1)) {
                        rho.apply_gate(gate);
                    }
                }
            }
        }
    }

    fn retire(&mut self, clbit: usize) {
        let old = std::mem::take(&mut self.branches);
        for (mut key, rho) in old {
            key.retain(|(c, _)| *c != clbit);
            match self.branches.get_mut(&key) {
                Some(acc) => acc.add_assign(&rho),
                None => {
                    self.branches.insert(key, rho);
                }
            }
        }
    }

    fn collapse(&self) -> DensityMatrix {
        let mut iter = self.branches.values();
        let mut acc = iter.next().expect("ensemble is never empty").clone();
        for rho in iter {
            acc.add_assign(rho);
        }
        acc
    }
}

/// Index of the last `Conditional` reading each classical bit.
fn last_reads(circuit: &Circuit) -> Vec<Option<usize>> {
    let mut last = vec![None; circuit.num_clbits()];
    for (idx, instr) in circuit.instructions().iter().enumerate() {
        if let Instruction::Conditional { clbit, .. } = instr {
            last[*clbit] = Some(idx);
        }
    }
    last
}

fn run(
    circuit: &Circuit,
    initial: DensityMatrix,
    mut inspect: impl FnMut(usize, &Ensemble),
) -> Result<DensityMatrix, EngineError> {
    if initial.num_qubits() != circuit.num_qubits() {
        return Err(EngineError::DimensionMismatch { expected: circuit.num_qubits(), got: initial.num_qubits() });
    }
    let last = last_reads(circuit);
    let mut retire_at: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (c, idx) in last.iter().enumerate() {
        if let Some(idx) = idx {
            retire_at.entry(*idx).or_default().push(c);
        }
    }
    let mut ensemble = Ensemble::new(initial);
    for (idx, instr) in circuit.instructions().iter().enumerate() {
        let read = match instr {
            Instruction::Measure { clbit, .. } => last[*clbit].is_some(),
            _ => false,
        };
        ensemble.step(instr, read);
        if let Some(bits) = retire_at.get(&idx) {
            for &c in bits {
                ensemble.retire(c);
            }
        }
        inspect(idx, &ensemble);
    }
    Ok(ensemble.collapse())
}

/// Final state of `circuit` applied to `initial` (default |0…0⟩).
///
/// Measurement records are averaged out: the result is the probability-weighted
/// mixture over every branch, each with its feed-forward corrections applied.
pub fn evolve_exact(circuit: &Circuit, initial: Option<&DensityMatrix>) -> Result<DensityMatrix, EngineError> {
    let initial = initial.cloned().unwrap_or_else(|| DensityMatrix::zero_state(circuit.num_qubits()));
    run(circuit, initial, |_, _| {})
}

/// Like [`evolve_exact`] but calls `observer` with the mixed state after every instruction.
pub fn evolve_exact_inspect(
    circuit: &Circuit,
    initial: Option<&DensityMatrix>,
    mut observer: impl FnMut(usize, &DensityMatrix),
) -> Result<DensityMatrix, EngineError> {
    let initial = initial.cloned().unwrap_or_else(|| DensityMatrix::zero_state(circuit.num_qubits()));
    run(circuit, initial, |idx, ens| observer(idx, &ens.collapse()))
}

/// Applies the circuit's (linear) channel to an arbitrary operator.
pub fn evolve_operator(circuit: &Circuit, operator: DensityMatrix) -> Result<DensityMatrix, EngineError> {
    run(circuit, operator, |_, _| {})
}
