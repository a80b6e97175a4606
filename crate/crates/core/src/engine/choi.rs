// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Choi matrices, J = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|), with the channel output on the low index bits.

use crate::circuit::Circuit;
use crate::exec::Exec;
use crate::linalg::{Mat2, C64, ONE, ZERO};

use super::{evolve_operator, DensityMatrix, EngineError};

fn assemble(din: usize, dout: usize, blocks: &[(usize, usize, Vec<C64>)]) -> DensityMatrix {
    let dim = din * dout;
    let mut data = vec![ZERO; dim * dim];
    for (i, j, block) in blocks {
        for a in 0..dout {
            for b in 0..dout {
                data[(i * dout + a) * dim + j * dout + b] = block[a * dout + b];
            }
        }
    }
    DensityMatrix::from_operator(data).expect("Choi dimensions are powers of two")
}

/// Choi matrix of a single-qubit Kraus channel.
pub fn choi_of_kraus(kraus: &[Mat2]) -> DensityMatrix {
    let mut blocks = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            let mut block = vec![ZERO; 4];
            for k in kraus {
                for a in 0..2 {
                    for b in 0..2 {
                        block[a * 2 + b] += k[a][i] * k[b][j].conj();
                    }
                }
            }
            blocks.push((i, j, block));
        }
    }
    assemble(2, 2, &blocks)
}

/// Choi matrix of ρ ↦ UρU† for a `dim×dim` row-major unitary.
pub fn choi_of_unitary(u: &[C64], dim: usize) -> DensityMatrix {
    let mut blocks = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            let block = (0..dim * dim).map(|ab| u[(ab / dim) * dim + i] * u[(ab % dim) * dim + j].conj()).collect();
            blocks.push((i, j, block));
        }
    }
    assemble(dim, dim, &blocks)
}

/// Choi matrix of the channel a circuit induces from `inputs` to `outputs`.
///
/// `inputs[p]` / `outputs[p]` are bit `p` of the channel's input / output
/// index. Every qubit that is not an input starts in |0⟩; every qubit that is
/// not an output is traced away.
pub fn choi_of_circuit(circuit: &Circuit, inputs: &[usize], outputs: &[usize], exec: Exec) -> Result<DensityMatrix, EngineError> {
    let n = circuit.num_qubits();
    let (din, dout) = (1usize << inputs.len(), 1usize << outputs.len());
    let embed = |i: usize| inputs.iter().enumerate().fold(0usize, |acc, (p, &q)| acc | (((i >> p) & 1) << q));
    let pairs: Vec<(usize, usize)> = (0..din).flat_map(|i| (0..din).map(move |j| (i, j))).collect();
    let blocks = exec.map(&pairs, |&(i, j)| -> Result<_, EngineError> {
        let dim = 1usize << n;
        let mut op = vec![ZERO; dim * dim];
        op[embed(i) * dim + embed(j)] = ONE;
        let out = evolve_operator(circuit, DensityMatrix::from_operator(op)?)?;
        Ok((i, j, out.reduce_to(outputs)?.into_data()))
    });
    let blocks = blocks.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(din, dout, &blocks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::StandardGate;
    use crate::linalg::identity;

    #[test]
    fn identity_circuit_matches_identity_unitary() {
        let c = Circuit::new(1, 0);
        let j = choi_of_circuit(&c, &[0], &[0], Exec::Sequential).unwrap();
        let id: Vec<C64> = identity::<2>().iter().flatten().copied().collect();
        assert!(j.max_abs_diff(&choi_of_unitary(&id, 2)) < 1e-15);
        assert!(j.max_abs_diff(&choi_of_kraus(&[identity::<2>()])) < 1e-15);
    }

    #[test]
    fn cx_circuit_matches_cx_unitary() {
        let mut c = Circuit::new(2, 0);
        c.cx(1, 0).unwrap();
        let cx: Vec<C64> = StandardGate::Cx.matrix2().unwrap().iter().flatten().copied().collect();
        // inputs [0, 1] → local index 2·q1 + q0, matching the gate's [control=q1, target=q0]
        let j = choi_of_circuit(&c, &[0, 1], &[0, 1], Exec::Parallel).unwrap();
        assert!(j.max_abs_diff(&choi_of_unitary(&cx, 4)) < 1e-15);
    }
}
