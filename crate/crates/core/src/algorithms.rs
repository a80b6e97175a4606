// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Monolithic and distributed builders for cross-QPU Bell generation,
//! two-qubit Grover search and the quantum Fourier transform.
//!
//! Every builder returns an [`AlgorithmCircuit`] whose `register` lists the
//! physical qubit carrying each logical output bit, least significant first,
//! so `state.reduce_to(&register)` is directly comparable between layouts.

use std::f64::consts::PI;

use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Instruction, StandardGate};
use crate::engine::DensityMatrix;
use crate::linalg::{Mat2, C64, ONE, ZERO};
use crate::noise::{LinkQubits, NoiseLinkSpec};
use crate::remote::{build_bell_pair, cat_comm_cu, cat_comm_on_pair, CatSession, Protocol, RemoteError, RemoteGateRequest};
use crate::topology::{line_layout, Role, TopologyError, VirtualTopology};

pub const MAX_QFT_QUBITS: usize = 6;
pub const DISTRIBUTED_QFT_QUBITS: usize = 5;

#[derive(Debug, Error)]
pub enum AlgorithmError {
    #[error("marked state must be one of 00, 01, 10, 11, got `{0}`")]
    BadMarkedString(String),
    #[error("unsupported register size {0}")]
    UnsupportedSize(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Monolithic,
    Distributed(DistributedOptions),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistributedOptions {
    pub noise: NoiseLinkSpec,
    /// Share one Bell pair across consecutive remote gates with a common control.
    pub batched_cat: bool,
}

impl Layout {
    pub fn distributed(noise: NoiseLinkSpec) -> Self {
        Layout::Distributed(DistributedOptions { noise, batched_cat: false })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmKind {
    CrossQpuBell,
    Grover2 { marked: String },
    Qft { n: usize, input: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    pub layout: Layout,
}

impl AlgorithmSpec {
    pub fn build(&self) -> Result<AlgorithmCircuit, AlgorithmError> {
        match &self.kind {
            AlgorithmKind::CrossQpuBell => match &self.layout {
                Layout::Monolithic => monolithic_bell(),
                Layout::Distributed(opts) => {
                    let t = two_qpu_line()?;
                    cross_qpu_bell(&t.topology, t.control, t.target, &opts.noise)
                }
            },
            AlgorithmKind::Grover2 { marked } => grover2(marked, &self.layout),
            AlgorithmKind::Qft { n, input } => qft_on_input(*n, *input, &self.layout),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlgorithmCircuit {
    pub circuit: Circuit,
    /// `register[i]` is the physical qubit holding logical output bit `i`.
    pub register: Vec<usize>,
    pub remote_gates: usize,
    pub bell_pairs: usize,
    pub topology: Option<VirtualTopology>,
}

impl AlgorithmCircuit {
    /// Output state of the logical register, least significant bit on qubit 0.
    pub fn output_state(&self, full: &DensityMatrix) -> Result<DensityMatrix, crate::engine::EngineError> {
        full.reduce_to(&self.register)
    }
}

struct TwoQpuLine {
    topology: VirtualTopology,
    control: usize,
    target: usize,
    link: LinkQubits,
}

/// A[P, E, C] | B[C, E, P]: one processing qubit per QPU.
fn two_qpu_line() -> Result<TwoQpuLine, AlgorithmError> {
    use Role::*;
    let topology = line_layout(&[("A", &[Processing, Environment, Communication]), ("B", &[Communication, Environment, Processing])])?;
    let link = topology.link_between(0, 5)?;
    Ok(TwoQpuLine { topology, control: 0, target: 5, link })
}

fn monolithic_bell() -> Result<AlgorithmCircuit, AlgorithmError> {
    let mut c = Circuit::new(2, 0);
    c.h(1)?.cx(1, 0)?;
    Ok(AlgorithmCircuit { circuit: c, register: vec![0, 1], remote_gates: 0, bell_pairs: 0, topology: None })
}

/// Bell pair on the link, H on `qa`, then the cat-comm CNOT body from `qa` to `qb`.
///
/// The register is `[qb, qa]`, so bit 1 of an outcome is `qa`.
pub fn cross_qpu_bell(topology: &VirtualTopology, qa: usize, qb: usize, noise: &NoiseLinkSpec) -> Result<AlgorithmCircuit, AlgorithmError> {
    let link = topology.link_between(qa, qb)?;
    let req = RemoteGateRequest::cnot(Protocol::CatComm, qa, qb, link, noise.clone());
    req.validate(topology)?;
    let mut c = Circuit::new(topology.num_qubits(), 0);
    build_bell_pair(&mut c, link, noise)?;
    c.h(qa)?;
    cat_comm_on_pair(&mut c, &req)?;
    Ok(AlgorithmCircuit { circuit: c, register: vec![qb, qa], remote_gates: 1, bell_pairs: 1, topology: Some(topology.clone()) })
}

/// Parses a two-character marked string; character 0 is logical qubit 1 (the MSB).
pub fn parse_marked(marked: &str) -> Result<usize, AlgorithmError> {
    match marked {
        "00" => Ok(0),
        "01" => Ok(1),
        "10" => Ok(2),
        "11" => Ok(3),
        _ => Err(AlgorithmError::BadMarkedString(marked.to_string())),
    }
}

/// One Grover iteration on two qubits.
pub fn grover2(marked: &str, layout: &Layout) -> Result<AlgorithmCircuit, AlgorithmError> {
    let index = parse_marked(marked)?;
    let (mut c, msb, lsb, topo) = match layout {
        Layout::Monolithic => (Circuit::new(2, 0), 1, 0, None),
        Layout::Distributed(_) => {
            let t = two_qpu_line()?;
            (Circuit::new(t.topology.num_qubits(), 0), t.control, t.target, Some(t))
        }
    };
    let mut remote_gates = 0;
    let mut cz = |c: &mut Circuit| -> Result<(), AlgorithmError> {
        match &topo {
            None => {
                c.cz(msb, lsb)?;
            }
            Some(t) => {
                let opts = match layout {
                    Layout::Distributed(o) => o,
                    Layout::Monolithic => unreachable!(),
                };
                let mut req = RemoteGateRequest::cnot(Protocol::CatComm, t.control, t.target, t.link, opts.noise.clone());
                req.u = StandardGate::Z.matrix1().expect("1q");
                cat_comm_cu(c, &t.topology, &req)?;
                remote_gates += 1;
            }
        }
        Ok(())
    };
    let flips: Vec<usize> = [(msb, index >> 1), (lsb, index & 1)].into_iter().filter(|&(_, bit)| bit == 0).map(|(q, _)| q).collect();
    c.h(msb)?.h(lsb)?;
    for &q in &flips {
        c.x(q)?;
    }
    cz(&mut c)?;
    for &q in &flips {
        c.x(q)?;
    }
    c.h(msb)?.h(lsb)?.x(msb)?.x(lsb)?;
    cz(&mut c)?;
    c.x(msb)?.x(lsb)?.h(msb)?.h(lsb)?;
    Ok(AlgorithmCircuit {
        circuit: c,
        register: vec![lsb, msb],
        remote_gates,
        bell_pairs: remote_gates,
        topology: topo.map(|t| t.topology),
    })
}

/// QFT of |0…0⟩.
pub fn qft(n: usize, layout: &Layout) -> Result<AlgorithmCircuit, AlgorithmError> {
    qft_on_input(n, 0, layout)
}

fn phase(theta: f64) -> Mat2 {
    [[ONE, ZERO], [ZERO, C64::from_polar(1.0, theta)]]
}

/// QFT of the basis state |input⟩, logical qubit q1 being the most significant bit.
///
/// Monolithic: H and controlled-phase cascade followed by the SWAP layer.
/// Distributed (n = 5): QPU A holds q5, q1 and QPU B holds q2, q3, q4; there
/// is no SWAP layer, the register is relabelled instead, and each CP between
/// the QPUs is a cat-comm remote gate.
pub fn qft_on_input(n: usize, input: usize, layout: &Layout) -> Result<AlgorithmCircuit, AlgorithmError> {
    match layout {
        Layout::Monolithic => {
            if n == 0 || n > MAX_QFT_QUBITS || input >> n != 0 {
                return Err(AlgorithmError::UnsupportedSize(n));
            }
            // wires[m] is the physical qubit of logical q(m+1)
            let wires: Vec<usize> = (0..n).rev().collect();
            let mut c = Circuit::new(n, 0);
            prepare_input(&mut c, &wires, input)?;
            for i in 0..n {
                c.h(wires[i])?;
                for j in i + 1..n {
                    c.gate(StandardGate::Cp(PI / (1u64 << (j - i)) as f64), &[wires[j], wires[i]])?;
                }
            }
            for i in 0..n / 2 {
                c.gate(StandardGate::Swap, &[wires[i], wires[n - 1 - i]])?;
            }
            Ok(AlgorithmCircuit { circuit: c, register: (0..n).collect(), remote_gates: 0, bell_pairs: 0, topology: None })
        }
        Layout::Distributed(opts) => {
            if n != DISTRIBUTED_QFT_QUBITS || input >> n != 0 {
                return Err(AlgorithmError::UnsupportedSize(n));
            }
            distributed_qft(input, opts)
        }
    }
}

fn prepare_input(c: &mut Circuit, wires: &[usize], input: usize) -> Result<(), AlgorithmError> {
    let n = wires.len();
    for b in 0..n {
        if input >> b & 1 == 1 {
            c.x(wires[n - 1 - b])?;
        }
    }
    Ok(())
}

/// A[q5, q1, E, C] | B[C, E, q2, q3, q4].
pub fn distributed_qft_topology() -> Result<VirtualTopology, AlgorithmError> {
    use Role::*;
    Ok(line_layout(&[
        ("A", &[Processing, Processing, Environment, Communication]),
        ("B", &[Communication, Environment, Processing, Processing, Processing]),
    ])?)
}

fn distributed_qft(input: usize, opts: &DistributedOptions) -> Result<AlgorithmCircuit, AlgorithmError> {
    let n = DISTRIBUTED_QFT_QUBITS;
    let topo = distributed_qft_topology()?;
    let wires = [1usize, 6, 7, 8, 0];
    let link = topo.link_between(1, 6)?;
    let labels = ["q5", "q1", "envA", "commA", "commB", "envB", "q2", "q3", "q4"];
    let mut c = Circuit::new(topo.num_qubits(), 0).with_labels(labels.iter().map(|s| s.to_string()).collect());
    prepare_input(&mut c, &wires, input)?;
    let on_a = |q: usize| topo.qpu_of(q) == Some("A");
    let mut session: Option<CatSession> = None;
    let mut session_control = usize::MAX;
    let (mut remote_gates, mut bell_pairs) = (0, 0);
    for i in 0..n {
        if session.is_some() && session_control == wires[i] {
            session.take().expect("open").close(&mut c)?;
        }
        c.h(wires[i])?;
        for j in i + 1..n {
            let theta = PI / (1u64 << (j - i)) as f64;
            let (a, b) = (wires[j], wires[i]);
            if on_a(a) == on_a(b) {
                c.gate(StandardGate::Cp(theta), &[a, b])?;
                continue;
            }
            let (control, target) = if on_a(a) { (a, b) } else { (b, a) };
            remote_gates += 1;
            let mut req = RemoteGateRequest::cnot(Protocol::CatComm, control, target, link, opts.noise.clone());
            req.u = phase(theta);
            if !opts.batched_cat {
                cat_comm_cu(&mut c, &topo, &req)?;
                bell_pairs += 1;
                continue;
            }
            if session.is_none() || session_control != control {
                if let Some(s) = session.take() {
                    s.close(&mut c)?;
                }
                req.validate(&topo)?;
                session = Some(CatSession::open(&mut c, control, link, &opts.noise)?);
                session_control = control;
                bell_pairs += 1;
            }
            session.as_ref().expect("open").apply(&mut c, &req.u, target)?;
        }
    }
    if let Some(s) = session.take() {
        s.close(&mut c)?;
    }
    Ok(AlgorithmCircuit { circuit: c, register: wires.to_vec(), remote_gates, bell_pairs, topology: Some(topo) })
}

/// Ideal QFT output e^{2πi jk/N}/√N over k, as a density matrix.
pub fn qft_ideal_state(n: usize, input: usize) -> DensityMatrix {
    let dim = 1usize << n;
    let norm = (dim as f64).sqrt().recip();
    let amps: Vec<C64> = (0..dim)
        .map(|k| C64::from_polar(norm, 2.0 * PI * ((input * k) % dim) as f64 / dim as f64))
        .collect();
    DensityMatrix::from_pure(&amps).expect("normalised")
}

/// Number of instructions of each kind, for structural checks.
pub fn count_gates(circuit: &Circuit, name: &str) -> usize {
    circuit
        .instructions()
        .iter()
        .filter(|i| matches!(i, Instruction::Gate(g) if g.name == name))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::evolve_exact;

    #[test]
    fn marked_strings() {
        assert_eq!(parse_marked("10").unwrap(), 2);
        for bad in ["", "2", "0a", "000"] {
            assert!(matches!(parse_marked(bad), Err(AlgorithmError::BadMarkedString(_))));
        }
    }

    #[test]
    fn monolithic_qft_gate_set() {
        let a = qft(5, &Layout::Monolithic).unwrap();
        assert_eq!(count_gates(&a.circuit, "h"), 5);
        assert_eq!(count_gates(&a.circuit, "cp"), 10);
        assert_eq!(count_gates(&a.circuit, "swap"), 2);
        assert!(matches!(qft(7, &Layout::Monolithic), Err(AlgorithmError::UnsupportedSize(7))));
        assert!(matches!(qft(4, &Layout::distributed(NoiseLinkSpec::noiseless())), Err(AlgorithmError::UnsupportedSize(4))));
    }

    #[test]
    fn qft_of_zero_is_uniform() {
        let a = qft(5, &Layout::Monolithic).unwrap();
        let rho = evolve_exact(&a.circuit, None).unwrap();
        for r in 0..32 {
            for col in 0..32 {
                assert!((rho.get(r, col) - C64::new(1.0 / 32.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn distributed_qft_counts_remote_gates() {
        let plain = qft(5, &Layout::distributed(NoiseLinkSpec::noiseless())).unwrap();
        assert_eq!(plain.remote_gates, 6);
        assert_eq!(plain.bell_pairs, 6);
        assert_eq!(count_gates(&plain.circuit, "h"), 5 + 12);
        let batched = qft(
            5,
            &Layout::Distributed(DistributedOptions { noise: NoiseLinkSpec::noiseless(), batched_cat: true }),
        )
        .unwrap();
        assert_eq!(batched.remote_gates, 6);
        assert_eq!(batched.bell_pairs, 2);
    }

    #[test]
    fn noiseless_distributed_matches_monolithic() {
        let noiseless = Layout::distributed(NoiseLinkSpec::noiseless());
        let batched = Layout::Distributed(DistributedOptions { noise: NoiseLinkSpec::noiseless(), batched_cat: true });
        for input in [0, 1, 13, 31] {
            let ideal = qft_ideal_state(5, input);
            for layout in [&Layout::Monolithic, &noiseless, &batched] {
                let a = qft_on_input(5, input, layout).unwrap();
                let out = a.output_state(&evolve_exact(&a.circuit, None).unwrap()).unwrap();
                assert!(out.max_abs_diff(&ideal) < 1e-9, "input {input} layout {layout:?}");
            }
        }
        for marked in ["00", "01", "10", "11"] {
            let mono = grover2(marked, &Layout::Monolithic).unwrap();
            let dist = grover2(marked, &noiseless).unwrap();
            assert_eq!(dist.remote_gates, 2);
            let a = mono.output_state(&evolve_exact(&mono.circuit, None).unwrap()).unwrap();
            let b = dist.output_state(&evolve_exact(&dist.circuit, None).unwrap()).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-9);
            assert!((a.probabilities()[parse_marked(marked).unwrap()] - 1.0).abs() < 1e-10);
        }
        let mono = AlgorithmSpec { kind: AlgorithmKind::CrossQpuBell, layout: Layout::Monolithic }.build().unwrap();
        let dist = AlgorithmSpec { kind: AlgorithmKind::CrossQpuBell, layout: noiseless.clone() }.build().unwrap();
        let a = mono.output_state(&evolve_exact(&mono.circuit, None).unwrap()).unwrap();
        let b = dist.output_state(&evolve_exact(&dist.circuit, None).unwrap()).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-9);
    }

    #[test]
    fn grover_rejects_bad_marked() {
        assert!(matches!(grover2("2", &Layout::Monolithic), Err(AlgorithmError::BadMarkedString(_))));
    }
}
