// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! OpenQASM 3 export.
//!
//! Standard gates keep their `stdgates.inc` names. Any other single-qubit
//! unitary is written as `U(θ, φ, λ)` (ZYZ Euler angles, global phase
//! dropped). Any other two-qubit gate of the form block-diag(I, e^{iγ}U) is
//! written as `ctrl @ U(θ, φ, λ)` followed by `p(γ)` on the control. Collision
//! gates use a locally defined `xx_plus_yy(theta)` gate built from `h`, `cx`,
//! `rz`, `s` and `sdg`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::circuit::{Circuit, Gate, GateOp, Instruction, StandardGate};
use crate::linalg::{self, Mat2};
use crate::noise::{collision_unitary, COLLISION_GATE};

use super::RunnerError;

const MATCH_TOL: f64 = 1e-12;

/// Euler angles and global phase with `m = e^{iγ} U(θ, φ, λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZyzAngles {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
    pub gamma: f64,
}

/// U(θ, φ, λ) as defined by OpenQASM 3.
pub fn u_matrix(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [linalg::re(c), -crate::linalg::C64::from_polar(s, lambda)],
        [crate::linalg::C64::from_polar(s, phi), crate::linalg::C64::from_polar(c, phi + lambda)],
    ]
}

pub fn zyz_decompose(m: &Mat2) -> ZyzAngles {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let theta = 2.0 * c.norm().atan2(a.norm());
    if c.norm() < 1e-14 {
        let gamma = a.arg();
        return ZyzAngles { theta: 0.0, phi: 0.0, lambda: d.arg() - gamma, gamma };
    }
    if a.norm() < 1e-14 {
        let gamma = c.arg();
        return ZyzAngles { theta: PI, phi: 0.0, lambda: (-b).arg() - gamma, gamma };
    }
    let gamma = a.arg();
    ZyzAngles { theta, phi: c.arg() - gamma, lambda: (-b).arg() - gamma, gamma }
}

fn angle(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

fn q(i: usize) -> String {
    format!("q[{i}]")
}

fn standard_statement(g: &Gate) -> Option<String> {
    let sg = StandardGate::parse(&g.name, g.theta).ok()?;
    let ok = match (&g.op, sg.matrix1(), sg.matrix2()) {
        (GateOp::Single { matrix, .. }, Some(m), _) => linalg::max_abs_diff(matrix, &m) < MATCH_TOL,
        (GateOp::Pair { matrix, .. }, _, Some(m)) => linalg::max_abs_diff(matrix, &m) < MATCH_TOL,
        _ => false,
    };
    if !ok {
        return None;
    }
    let args = g.qubits().into_iter().map(q).collect::<Vec<_>>().join(", ");
    Some(match sg.theta() {
        Some(t) => format!("{}({}) {args};", sg.name(), angle(t)),
        None => format!("{} {args};", sg.name()),
    })
}

fn gate_statement(g: &Gate) -> Result<String, RunnerError> {
    if let Some(s) = standard_statement(g) {
        return Ok(s);
    }
    match &g.op {
        GateOp::Single { qubit, matrix } => {
            let z = zyz_decompose(matrix);
            Ok(format!("U({}, {}, {}) {};", angle(z.theta), angle(z.phi), angle(z.lambda), q(*qubit)))
        }
        GateOp::Pair { qubits: [a, b], matrix } => {
            if g.name == COLLISION_GATE {
                if let Some(theta) = g.theta {
                    let expected = collision_unitary(theta, 1.0).ok();
                    if expected.is_some_and(|u| linalg::max_abs_diff(&u, matrix) < MATCH_TOL) {
                        return Ok(format!("xx_plus_yy({}) {}, {};", angle(theta), q(*a), q(*b)));
                    }
                }
            }
            let u = linalg::as_controlled(matrix, MATCH_TOL)
                .ok_or_else(|| RunnerError::UnsupportedInstruction(format!("two-qubit gate `{}` is not a controlled unitary", g.name)))?;
            let z = zyz_decompose(&u);
            let mut s = format!("ctrl @ U({}, {}, {}) {}, {};", angle(z.theta), angle(z.phi), angle(z.lambda), q(*a), q(*b));
            if z.gamma.abs() > 1e-15 {
                write!(s, " p({}) {};", angle(z.gamma), q(*a)).expect("string write");
            }
            Ok(s)
        }
    }
}

const XX_PLUS_YY: &str = "gate xx_plus_yy(theta) a, b {
  h a; h b; cx a, b; rz(theta) b; cx a, b; h a; h b;
  sdg a; sdg b; h a; h b; cx a, b; rz(theta) b; cx a, b; h a; h b; s a; s b;
}
";

/// Renders the circuit as OpenQASM 3 source.
pub fn to_qasm(circuit: &Circuit) -> Result<String, RunnerError> {
    let mut out = String::from("OPENQASM 3.0;\ninclude \"stdgates.inc\";\n");
    let uses_collision = circuit
        .instructions()
        .iter()
        .any(|i| matches!(i, Instruction::Gate(g) | Instruction::Conditional { gate: g, .. } if g.name == COLLISION_GATE));
    if uses_collision {
        out.push_str(XX_PLUS_YY);
    }
    if let Some(labels) = circuit.qubit_labels() {
        let _ = writeln!(out, "// qubits: {}", labels.join(", "));
    }
    let _ = writeln!(out, "qubit[{}] q;", circuit.num_qubits());
    if circuit.num_clbits() > 0 {
        let _ = writeln!(out, "bit[{}] c;", circuit.num_clbits());
    }
    for instr in circuit.instructions() {
        let line = match instr {
            Instruction::Gate(g) => gate_statement(g)?,
            Instruction::Measure { qubit, clbit } => format!("c[{clbit}] = measure {};", q(*qubit)),
            Instruction::Reset { qubit } => format!("reset {};", q(*qubit)),
            Instruction::Conditional { clbit, gate } => format!("if (c[{clbit}] == 1) {{ {} }}", gate_statement(gate)?),
            Instruction::Barrier { label } => {
                if label.is_empty() {
                    "barrier q;".to_string()
                } else {
                    format!("barrier q; // {label}")
                }
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn export_qasm(circuit: &Circuit, path: &Path) -> Result<(), RunnerError> {
    let text = to_qasm(circuit)?;
    std::fs::write(path, text).map_err(|e| RunnerError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::DensityMatrix;
    use crate::linalg::{C64, ZERO};
    use proptest::prelude::*;

    fn global_phase_equal(a: &Mat2, b: &Mat2, gamma: f64) -> f64 {
        let ph = C64::from_polar(1.0, gamma);
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((a[r][c] - ph * b[r][c]).norm());
            }
        }
        worst
    }

    fn random_unitary(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
        let rz = |t: f64| StandardGate::Rz(t).matrix1().unwrap();
        let ry = |t: f64| StandardGate::Ry(t).matrix1().unwrap();
        let mut m = linalg::matmul(&rz(a), &linalg::matmul(&ry(b), &rz(c)));
        m.iter_mut().flatten().for_each(|z| *z *= C64::from_polar(1.0, d));
        m
    }

    proptest! {
        #[test]
        fn zyz_reconstructs_any_unitary(a in -PI..PI, b in 0.0..PI, c in -PI..PI, d in -PI..PI) {
            let m = random_unitary(a, b, c, d);
            let z = zyz_decompose(&m);
            prop_assert!(global_phase_equal(&m, &u_matrix(z.theta, z.phi, z.lambda), z.gamma) < 1e-12);
        }
    }

    #[test]
    fn zyz_edge_cases() {
        for g in [StandardGate::X, StandardGate::Y, StandardGate::Z, StandardGate::S, StandardGate::H] {
            let m = g.matrix1().unwrap();
            let z = zyz_decompose(&m);
            assert!(global_phase_equal(&m, &u_matrix(z.theta, z.phi, z.lambda), z.gamma) < 1e-12, "{g:?}");
        }
    }

    /// Rebuilds the `xx_plus_yy` body from standard gates and compares it to the collision unitary.
    #[test]
    fn collision_decomposition_matches() {
        for theta in [0.0, 0.1, 0.5, 1.3, PI / 2.0] {
            let (a, b) = (1, 0);
            let mut c = Circuit::new(2, 0);
            let xx = |c: &mut Circuit| {
                c.h(a).unwrap().h(b).unwrap().cx(a, b).unwrap();
                c.gate(StandardGate::Rz(theta), &[b]).unwrap();
                c.cx(a, b).unwrap().h(a).unwrap().h(b).unwrap();
            };
            xx(&mut c);
            c.gate(StandardGate::Sdg, &[a]).unwrap().gate(StandardGate::Sdg, &[b]).unwrap();
            xx(&mut c);
            c.gate(StandardGate::S, &[a]).unwrap().gate(StandardGate::S, &[b]).unwrap();
            let expected = collision_unitary(theta, 1.0).unwrap();
            for input in 0..4 {
                let mut rho = DensityMatrix::basis_state(2, input);
                for instr in c.instructions() {
                    if let Instruction::Gate(g) = instr {
                        rho.apply_gate(g);
                    }
                }
                // local index of the collision gate on [a, b] is 2a + b = physical index here
                let col: Vec<C64> = (0..4).map(|r| expected[r][input]).collect();
                let ov = rho.overlap_with_pure(&col).unwrap();
                assert!((ov - 1.0).abs() < 1e-12, "theta {theta} input {input}");
            }
        }
    }

    #[test]
    fn bell_export() {
        let mut c = Circuit::new(2, 2);
        c.h(0).unwrap().cx(0, 1).unwrap().measure(0, 0).unwrap().measure(1, 1).unwrap();
        let text = to_qasm(&c).unwrap();
        let statements: Vec<&str> = text.lines().collect();
        assert_eq!(statements.iter().filter(|l| l.starts_with("h ")).count(), 1);
        assert_eq!(statements.iter().filter(|l| l.starts_with("cx ")).count(), 1);
        assert_eq!(text.matches("measure").count(), 2);
    }

    #[test]
    fn empty_circuit_is_header_only() {
        let text = to_qasm(&Circuit::new(3, 0)).unwrap();
        assert_eq!(text, "OPENQASM 3.0;\ninclude \"stdgates.inc\";\nqubit[3] q;\n");
    }

    #[test]
    fn controlled_phase_carries_global_phase() {
        let u: Mat2 = [[C64::from_polar(1.0, 0.3), ZERO], [ZERO, C64::from_polar(1.0, 1.1)]];
        let g = Gate::controlled("cu", &u, 2, 0).unwrap();
        let line = gate_statement(&g).unwrap();
        assert!(line.starts_with("ctrl @ U(0, 0, 0.8"), "{line}");
        assert!(line.ends_with("p(0.3) q[2];"), "{line}");
    }

    #[test]
    fn swap_like_gates_are_rejected_unless_standard() {
        let mut m = StandardGate::Swap.matrix2().unwrap();
        assert!(gate_statement(&Gate::pair("swap", m, [0, 1]).unwrap()).unwrap().starts_with("swap "));
        m[0][0] = C64::new(0.0, 1.0);
        let g = Gate::pair("weird", m, [0, 1]).unwrap();
        assert!(matches!(gate_statement(&g), Err(RunnerError::UnsupportedInstruction(_))));
    }
}
