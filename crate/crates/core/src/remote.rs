// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Remote controlled gates over a noisy Bell pair.
//!
//! Both protocols consume exactly one Bell pair per gate:
//!
//! * **cat-comm** copies the control into the remote communication qubit as
//!   a cat state, applies the controlled-U locally on the remote side, then
//!   disentangles with an X-basis measurement and a Z correction. The control
//!   qubit survives.
//! * **TP1** teleports the control into the remote communication qubit and
//!   applies the controlled-U there. The original control is consumed and the
//!   logical control lives on in the remote communication qubit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, StandardGate};
use crate::engine::{evolve_exact, sample_shots, EngineError};
use crate::linalg::{self, Mat2};
use crate::noise::{insert_link_noise, LinkQubits, NoiseError, NoiseLinkSpec};
use crate::topology::{line_layout, Role, TopologyError, VirtualTopology};

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("request is for {requested:?} but builder implements {builder:?}")]
    ProtocolMismatch { requested: Protocol, builder: Protocol },
    #[error("invalid remote gate request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    CatComm,
    Tp1,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::CatComm => "cat_comm",
            Protocol::Tp1 => "tp1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteGateRequest {
    pub protocol: Protocol,
    /// Processing qubit on the near QPU.
    pub control: usize,
    /// Processing qubit on the far QPU.
    pub target: usize,
    pub u: Mat2,
    pub link: LinkQubits,
    pub noise: NoiseLinkSpec,
}

/// Where the results of a remote gate ended up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteGateOutcome {
    /// Qubit holding the logical control afterwards.
    pub control_out: usize,
    pub target: usize,
    /// Mid-circuit measurement bits (corrections, not outputs).
    pub clbits: Vec<usize>,
    pub bell_pairs: usize,
}

impl RemoteGateRequest {
    pub fn cnot(protocol: Protocol, control: usize, target: usize, link: LinkQubits, noise: NoiseLinkSpec) -> Self {
        let u = StandardGate::X.matrix1().expect("single-qubit gate");
        Self { protocol, control, target, u, link, noise }
    }

    pub fn validate(&self, topo: &VirtualTopology) -> Result<(), RemoteError> {
        let bad = |m: String| Err(RemoteError::InvalidRequest(m));
        for (q, what) in [(self.control, "control"), (self.target, "target")] {
            if topo.role(q) != Some(Role::Processing) {
                return bad(format!("{what} qubit {q} is not a processing qubit"));
            }
        }
        if topo.qpu_of(self.control) == topo.qpu_of(self.target) {
            return bad("control and target sit in the same QPU".into());
        }
        let l = self.link;
        for (comm, env) in [(l.comm_a, l.env_a), (l.comm_b, l.env_b)] {
            if topo.role(comm) != Some(Role::Communication) {
                return bad(format!("qubit {comm} is not a communication qubit"));
            }
            if topo.env_for(comm) != Some(env) {
                return bad(format!("qubit {env} is not the environment of {comm}"));
            }
        }
        if !topo.links().contains(&[l.comm_a.min(l.comm_b), l.comm_a.max(l.comm_b)]) {
            return bad(format!("no interconnect between {} and {}", l.comm_a, l.comm_b));
        }
        if topo.qpu_of(l.comm_a) != topo.qpu_of(self.control) || topo.qpu_of(l.comm_b) != topo.qpu_of(self.target) {
            return bad("link orientation does not match control → target".into());
        }
        let defect = linalg::unitarity_defect(&self.u);
        if defect > crate::circuit::UNITARITY_TOL {
            return bad(format!("controlled operation is not unitary (defect {defect:.3e})"));
        }
        Ok(())
    }
}

/// H(comm_a); CX(comm_a, comm_b); then the link's collision noise.
///
/// Communication qubits left dirty by an earlier remote gate are reset first.
pub fn build_bell_pair(circuit: &mut Circuit, link: LinkQubits, noise: &NoiseLinkSpec) -> Result<(), RemoteError> {
    for comm in [link.comm_a, link.comm_b] {
        if circuit.touches(comm) {
            circuit.reset(comm)?;
        }
    }
    circuit.h(link.comm_a)?.cx(link.comm_a, link.comm_b)?;
    insert_link_noise(circuit, link, noise)?;
    Ok(())
}

/// A cat state shared between a control and the remote communication qubit.
///
/// While open, any number of controlled operations may be applied from the
/// remote side; [`CatSession::close`] undoes the entanglement.
#[derive(Debug)]
pub struct CatSession {
    control: usize,
    remote: usize,
    clbits: Vec<usize>,
}

impl CatSession {
    /// Opens on a Bell pair that is already in place on `link`.
    pub fn open_on_pair(circuit: &mut Circuit, control: usize, link: LinkQubits) -> Result<Self, RemoteError> {
        circuit.cx(control, link.comm_a)?;
        let c1 = circuit.measure_fresh(link.comm_a)?;
        circuit.conditional(c1, StandardGate::X.on(&[link.comm_b])?)?;
        Ok(Self { control, remote: link.comm_b, clbits: vec![c1] })
    }

    pub fn open(circuit: &mut Circuit, control: usize, link: LinkQubits, noise: &NoiseLinkSpec) -> Result<Self, RemoteError> {
        build_bell_pair(circuit, link, noise)?;
        Self::open_on_pair(circuit, control, link)
    }

    pub fn apply(&self, circuit: &mut Circuit, u: &Mat2, target: usize) -> Result<(), RemoteError> {
        circuit.push(crate::circuit::Instruction::Gate(Gate::controlled("cu", u, self.remote, target)?))?;
        Ok(())
    }

    pub fn close(mut self, circuit: &mut Circuit) -> Result<Vec<usize>, RemoteError> {
        circuit.h(self.remote)?;
        let c2 = circuit.measure_fresh(self.remote)?;
        circuit.conditional(c2, StandardGate::Z.on(&[self.control])?)?;
        self.clbits.push(c2);
        Ok(self.clbits)
    }
}

/// Cat-comm controlled-U (CNOT when `u = X`).
pub fn cat_comm_cu(circuit: &mut Circuit, topo: &VirtualTopology, req: &RemoteGateRequest) -> Result<RemoteGateOutcome, RemoteError> {
    if req.protocol != Protocol::CatComm {
        return Err(RemoteError::ProtocolMismatch { requested: req.protocol, builder: Protocol::CatComm });
    }
    req.validate(topo)?;
    build_bell_pair(circuit, req.link, &req.noise)?;
    cat_comm_on_pair(circuit, req)
}

/// The cat-comm steps that follow Bell-pair creation.
pub(crate) fn cat_comm_on_pair(circuit: &mut Circuit, req: &RemoteGateRequest) -> Result<RemoteGateOutcome, RemoteError> {
    let session = CatSession::open_on_pair(circuit, req.control, req.link)?;
    session.apply(circuit, &req.u, req.target)?;
    let clbits = session.close(circuit)?;
    Ok(RemoteGateOutcome { control_out: req.control, target: req.target, clbits, bell_pairs: 1 })
}

/// Teleportation-based controlled-U (TP1); applies `req.u`, so a CNOT for `u = X`.
pub fn tp1_cnot(circuit: &mut Circuit, topo: &VirtualTopology, req: &RemoteGateRequest) -> Result<RemoteGateOutcome, RemoteError> {
    if req.protocol != Protocol::Tp1 {
        return Err(RemoteError::ProtocolMismatch { requested: req.protocol, builder: Protocol::Tp1 });
    }
    req.validate(topo)?;
    let LinkQubits { comm_a, comm_b, .. } = req.link;
    build_bell_pair(circuit, req.link, &req.noise)?;
    circuit.cx(req.control, comm_a)?.h(req.control)?;
    let c1 = circuit.measure_fresh(comm_a)?;
    let c2 = circuit.measure_fresh(req.control)?;
    circuit.conditional(c1, StandardGate::X.on(&[comm_b])?)?;
    circuit.conditional(c2, StandardGate::Z.on(&[comm_b])?)?;
    circuit.push(crate::circuit::Instruction::Gate(Gate::controlled("cu", &req.u, comm_b, req.target)?))?;
    Ok(RemoteGateOutcome { control_out: comm_b, target: req.target, clbits: vec![c1, c2], bell_pairs: 1 })
}

/// Dispatches on `req.protocol`.
pub fn remote_cu(circuit: &mut Circuit, topo: &VirtualTopology, req: &RemoteGateRequest) -> Result<RemoteGateOutcome, RemoteError> {
    match req.protocol {
        Protocol::CatComm => cat_comm_cu(circuit, topo, req),
        Protocol::Tp1 => tp1_cnot(circuit, topo, req),
    }
}

/// Two QPUs on a 7-qubit line: A = {q1ᴬ processing, q2ᴬ environment, q3ᴬ communication},
/// B = {q1ᴮ communication, q2ᴮ environment, q3ᴮ, q4ᴮ processing}.
pub struct RemoteCnotLayout {
    pub topology: VirtualTopology,
    pub control: usize,
    pub target: usize,
    pub link: LinkQubits,
}

impl RemoteCnotLayout {
    pub const LABELS: [&'static str; 7] = ["q1^A", "q2^A", "q3^A", "q1^B", "q2^B", "q3^B", "q4^B"];

    pub fn new() -> Self {
        use Role::*;
        let topology = line_layout(&[
            ("A", &[Processing, Environment, Communication]),
            ("B", &[Communication, Environment, Processing, Processing]),
        ])
        .expect("static layout is valid");
        let link = topology.link_between(0, 6).expect("static layout has a link");
        Self { topology, control: 0, target: 6, link }
    }

    pub fn circuit(&self) -> Circuit {
        Circuit::new(7, 0).with_labels(Self::LABELS.iter().map(|s| s.to_string()).collect())
    }

    /// Remote CNOT with the control prepared in |control_init⟩ and the target in |0⟩.
    pub fn remote_cnot_circuit(&self, protocol: Protocol, control_init: u8, noise: &NoiseLinkSpec) -> Result<(Circuit, RemoteGateOutcome), RemoteError> {
        let mut c = self.circuit();
        if control_init == 1 {
            c.x(self.control)?;
        }
        let req = RemoteGateRequest::cnot(protocol, self.control, self.target, self.link, noise.clone());
        let out = remote_cu(&mut c, &self.topology, &req)?;
        Ok((c, out))
    }
}

impl Default for RemoteCnotLayout {
    fn default() -> Self {
        Self::new()
    }
}

/// Exact probability that (control, target) read `(c, c)` after a remote CNOT
/// from |c⟩|0⟩, marginalising the protocol's correction bits.
pub fn success_probability(protocol: Protocol, control_init: u8, noise: &NoiseLinkSpec) -> Result<f64, RemoteError> {
    let layout = RemoteCnotLayout::new();
    let (c, out) = layout.remote_cnot_circuit(protocol, control_init, noise)?;
    let rho = evolve_exact(&c, None)?;
    let marginal = rho.marginal(&[out.control_out, out.target]);
    let c = usize::from(control_init);
    Ok(marginal[c | (c << 1)])
}

/// Shot-sampled estimate of [`success_probability`].
pub fn success_probability_shots(protocol: Protocol, control_init: u8, noise: &NoiseLinkSpec, shots: u64, seed: u64) -> Result<f64, RemoteError> {
    let layout = RemoteCnotLayout::new();
    let (mut c, out) = layout.remote_cnot_circuit(protocol, control_init, noise)?;
    let mc = c.measure_fresh(out.control_out)?;
    let mt = c.measure_fresh(out.target)?;
    let r = sample_shots(&c, shots, seed)?;
    let cbit = usize::from(control_init);
    Ok(r.marginal(&[mc, mt])[cbit | (cbit << 1)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Instruction;
    use crate::engine::DensityMatrix;
    use crate::linalg::{re, C64, ZERO};
    use crate::noise::FiberType;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn phi_plus() -> [C64; 4] {
        [re(FRAC_1_SQRT_2), ZERO, ZERO, re(FRAC_1_SQRT_2)]
    }

    fn pair_state(noise: &NoiseLinkSpec) -> DensityMatrix {
        let l = RemoteCnotLayout::new();
        let mut c = l.circuit();
        build_bell_pair(&mut c, l.link, noise).unwrap();
        evolve_exact(&c, None).unwrap().reduce_to(&[l.link.comm_a, l.link.comm_b]).unwrap()
    }

    #[test]
    fn noiseless_pair_is_phi_plus() {
        let rho = pair_state(&NoiseLinkSpec::noiseless());
        assert!((rho.overlap_with_pure(&phi_plus()).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn default_pair_is_degraded() {
        let rho = pair_state(&NoiseLinkSpec::default());
        assert!(rho.overlap_with_pure(&phi_plus()).unwrap() < 1.0);
    }

    #[test]
    fn fully_damped_pair_collapses_to_ground() {
        let noise = NoiseLinkSpec { kappa_transducer: FRAC_PI_2, ..NoiseLinkSpec::default() };
        let rho = pair_state(&noise);
        assert!(rho.max_abs_diff(&DensityMatrix::zero_state(2)) < 1e-14);
        // ⟨Φ+|00⟩⟨00|Φ+⟩ = |1/√2|² = 1/2
        assert!((rho.overlap_with_pure(&phi_plus()).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn cat_comm_truth_table_and_bell_output() {
        let l = RemoteCnotLayout::new();
        for init in [0u8, 1] {
            assert!((success_probability(Protocol::CatComm, init, &NoiseLinkSpec::noiseless()).unwrap() - 1.0).abs() < 1e-12);
            assert!((success_probability(Protocol::Tp1, init, &NoiseLinkSpec::noiseless()).unwrap() - 1.0).abs() < 1e-12);
        }

        let mut c = l.circuit();
        c.h(l.control).unwrap();
        let req = RemoteGateRequest::cnot(Protocol::CatComm, l.control, l.target, l.link, NoiseLinkSpec::noiseless());
        cat_comm_cu(&mut c, &l.topology, &req).unwrap();
        let rho = evolve_exact(&c, None).unwrap().reduce_to(&[l.control, l.target]).unwrap();
        assert!((rho.overlap_with_pure(&phi_plus()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_comm_cz_matches_local_cz() {
        let l = RemoteCnotLayout::new();
        let mut remote = l.circuit();
        remote.h(l.control).unwrap().h(l.target).unwrap();
        let mut req = RemoteGateRequest::cnot(Protocol::CatComm, l.control, l.target, l.link, NoiseLinkSpec::noiseless());
        req.u = StandardGate::Z.matrix1().unwrap();
        cat_comm_cu(&mut remote, &l.topology, &req).unwrap();

        let mut local = Circuit::new(2, 0);
        local.h(0).unwrap().h(1).unwrap().cz(0, 1).unwrap();
        let want = evolve_exact(&local, None).unwrap();
        let got = evolve_exact(&remote, None).unwrap().reduce_to(&[l.control, l.target]).unwrap();
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn tp1_examples() {
        let l = RemoteCnotLayout::new();
        for init in [0u8, 1] {
            let (c, out) = l.remote_cnot_circuit(Protocol::Tp1, init, &NoiseLinkSpec::noiseless()).unwrap();
            assert_eq!(out.control_out, l.link.comm_b);
            let rho = evolve_exact(&c, None).unwrap();
            let m = rho.marginal(&[out.control_out, out.target]);
            let k = usize::from(init) * 3;
            assert!((m[k] - 1.0).abs() < 1e-12);
        }

        let (a, b) = (0.3f64.cos(), 0.3f64.sin());
        let mut c = l.circuit();
        c.gate(StandardGate::Ry(0.6), &[l.control]).unwrap();
        let req = RemoteGateRequest::cnot(Protocol::Tp1, l.control, l.target, l.link, NoiseLinkSpec::noiseless());
        let out = tp1_cnot(&mut c, &l.topology, &req).unwrap();
        let rho = evolve_exact(&c, None).unwrap().reduce_to(&[out.target, out.control_out]).unwrap();
        // CNOT(α|0⟩ + β|1⟩)|0⟩ = α|00⟩ + β|11⟩
        let want = [re(a), ZERO, ZERO, re(b)];
        let want = DensityMatrix::from_pure(&want).unwrap();
        assert!(rho.max_abs_diff(&want) < 1e-10);
    }

    #[test]
    fn protocol_mismatch() {
        let l = RemoteCnotLayout::new();
        let mut c = l.circuit();
        let req = RemoteGateRequest::cnot(Protocol::Tp1, l.control, l.target, l.link, NoiseLinkSpec::noiseless());
        assert!(matches!(cat_comm_cu(&mut c, &l.topology, &req), Err(RemoteError::ProtocolMismatch { .. })));
        let req = RemoteGateRequest { protocol: Protocol::CatComm, ..req };
        assert!(matches!(tp1_cnot(&mut c, &l.topology, &req), Err(RemoteError::ProtocolMismatch { .. })));
    }

    #[test]
    fn invalid_requests() {
        let l = RemoteCnotLayout::new();
        let mut c = l.circuit();
        let same_side = RemoteGateRequest::cnot(Protocol::CatComm, 5, 6, l.link, NoiseLinkSpec::noiseless());
        assert!(matches!(cat_comm_cu(&mut c, &l.topology, &same_side), Err(RemoteError::InvalidRequest(_))));
        let comm_as_control = RemoteGateRequest::cnot(Protocol::CatComm, 2, 6, l.link, NoiseLinkSpec::noiseless());
        assert!(matches!(cat_comm_cu(&mut c, &l.topology, &comm_as_control), Err(RemoteError::InvalidRequest(_))));
    }

    #[test]
    fn one_bell_pair_per_gate() {
        let l = RemoteCnotLayout::new();
        for p in [Protocol::CatComm, Protocol::Tp1] {
            let (c, out) = l.remote_cnot_circuit(p, 1, &NoiseLinkSpec::default()).unwrap();
            assert_eq!(out.bell_pairs, 1);
            let hadamards_on_comm_a = c
                .instructions()
                .iter()
                .filter(|i| matches!(i, Instruction::Gate(g) if g.name == "h" && g.qubits() == vec![l.link.comm_a]))
                .count();
            assert_eq!(hadamards_on_comm_a, 1);
        }
    }

    #[test]
    fn cat_comm_decays_with_fiber_steps() {
        let mut last = 1.0;
        for steps in 1..=10 {
            let noise = NoiseLinkSpec::default().with_steps(steps).with_fiber(FiberType::G652D);
            let p = success_probability(Protocol::CatComm, 1, &noise).unwrap();
            assert!(p <= last + 1e-12, "step {steps}: {p} > {last}");
            last = p;
        }
        assert!(last < 1.0);
    }

    #[test]
    fn shot_estimate_tracks_exact_value() {
        let noise = NoiseLinkSpec::default().with_steps(5);
        let exact = success_probability(Protocol::CatComm, 1, &noise).unwrap();
        let est = success_probability_shots(Protocol::CatComm, 1, &noise, 4096, 3).unwrap();
        let bound = 3.0 * (exact * (1.0 - exact) / 4096.0).sqrt() + 1e-3;
        assert!((est - exact).abs() <= bound, "{est} vs {exact}");
    }
}
