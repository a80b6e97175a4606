// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Circuit intermediate representation.
//!
//! A [`Circuit`] is an ordered list of [`Instruction`]s over a qubit register
//! and a classical-bit register. Besides unitary gates it carries mid-circuit
//! measurement, reset, and single-bit classical feed-forward, which is all the
//! remote-gate protocols need.
//!
//! Conventions used everywhere in this crate:
//! - qubit 0 is the least significant bit of a basis-state index;
//! - bitstrings and Pauli strings are printed most-significant first;
//! - a two-qubit matrix acting on `qubits = [a, b]` uses local index `2·a + b`,
//!   so `a` is the control of a controlled gate.
//!
//! Classical bits are single-writer: every `Measure` targets a bit that has
//! not been written before, and a `Conditional` may only read a bit that an
//! earlier `Measure` wrote.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Mat2, Mat4, C64, I, ONE, ZERO};

/// Tolerance for `‖U†U − I‖_max` on every stored gate.
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange { what: &'static str, index: usize, size: usize },
    #[error("gate `{name}` is not unitary (‖U†U − I‖ = {defect:.3e})")]
    NonUnitaryMatrix { name: String, defect: f64 },
    #[error("conditional reads classical bit {0} before any measurement writes it")]
    ConditionalOnUnwrittenBit(usize),
    #[error("classical bit {0} is already written by an earlier measurement")]
    ClbitAlreadyWritten(usize),
    #[error("unknown gate name `{0}`")]
    UnknownGateName(String),
    #[error("gate `{0}` needs a finite angle")]
    BadAngle(String),
    #[error("gate `{name}` expects {expected} qubit(s), got {got}")]
    BadArity { name: String, expected: usize, got: usize },
    #[error("two-qubit gate `{0}` acts twice on the same qubit")]
    RepeatedQubit(String),
    #[error("malformed circuit JSON: {0}")]
    Malformed(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The matrix part of a gate together with the qubits it acts on.
#[derive(Debug, Clone, PartialEq)]
pub enum GateOp {
    Single { qubit: usize, matrix: Mat2 },
    Pair { qubits: [usize; 2], matrix: Mat4 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: String,
    /// Angle of a parameterised standard gate, kept for export.
    pub theta: Option<f64>,
    pub op: GateOp,
}

impl Gate {
    pub fn single(name: impl Into<String>, matrix: Mat2, qubit: usize) -> Result<Self, CircuitError> {
        let name = name.into();
        let defect = linalg::unitarity_defect(&matrix);
        if !(defect <= UNITARITY_TOL) {
            return Err(CircuitError::NonUnitaryMatrix { name, defect });
        }
        Ok(Self { name, theta: None, op: GateOp::Single { qubit, matrix } })
    }

    pub fn pair(name: impl Into<String>, matrix: Mat4, qubits: [usize; 2]) -> Result<Self, CircuitError> {
        let name = name.into();
        if qubits[0] == qubits[1] {
            return Err(CircuitError::RepeatedQubit(name));
        }
        let defect = linalg::unitarity_defect(&matrix);
        if !(defect <= UNITARITY_TOL) {
            return Err(CircuitError::NonUnitaryMatrix { name, defect });
        }
        Ok(Self { name, theta: None, op: GateOp::Pair { qubits, matrix } })
    }

    /// block-diag(I, U) with `control` as the first qubit.
    pub fn controlled(name: impl Into<String>, u: &Mat2, control: usize, target: usize) -> Result<Self, CircuitError> {
        Self::pair(name, linalg::controlled(u), [control, target])
    }

    fn with_theta(mut self, theta: Option<f64>) -> Self {
        self.theta = theta;
        self
    }

    pub fn qubits(&self) -> Vec<usize> {
        match &self.op {
            GateOp::Single { qubit, .. } => vec![*qubit],
            GateOp::Pair { qubits, .. } => qubits.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Gate(Gate),
    Measure { qubit: usize, clbit: usize },
    Reset { qubit: usize },
    /// Apply `gate` iff classical bit `clbit` holds 1.
    Conditional { clbit: usize, gate: Gate },
    /// No-op marker kept for readability of exports.
    Barrier { label: String },
}

impl Instruction {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::Gate(g) | Instruction::Conditional { gate: g, .. } => g.qubits(),
            Instruction::Measure { qubit, .. } | Instruction::Reset { qubit } => vec![*qubit],
            Instruction::Barrier { .. } => Vec::new(),
        }
    }
}

/// Named gates with textbook matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StandardGate {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    Rz(f64),
    Ry(f64),
    Cx,
    Cz,
    /// diag(1, 1, 1, e^{iθ})
    Cp(f64),
    Swap,
}

impl StandardGate {
    /// Parses a gate name (case-insensitive); `theta` feeds the parameterised ones.
    pub fn parse(name: &str, theta: Option<f64>) -> Result<Self, CircuitError> {
        let need_theta = || match theta {
            Some(t) if t.is_finite() => Ok(t),
            _ => Err(CircuitError::BadAngle(name.to_string())),
        };
        Ok(match name.to_ascii_lowercase().as_str() {
            "h" => Self::H,
            "x" => Self::X,
            "y" => Self::Y,
            "z" => Self::Z,
            "s" => Self::S,
            "sdg" => Self::Sdg,
            "rz" => Self::Rz(need_theta()?),
            "ry" => Self::Ry(need_theta()?),
            "cx" | "cnot" => Self::Cx,
            "cz" => Self::Cz,
            "cp" => Self::Cp(need_theta()?),
            "swap" => Self::Swap,
            _ => return Err(CircuitError::UnknownGateName(name.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::H => "h",
            Self::X => "x",
            Self::Y => "y",
            Self::Z => "z",
            Self::S => "s",
            Self::Sdg => "sdg",
            Self::Rz(_) => "rz",
            Self::Ry(_) => "ry",
            Self::Cx => "cx",
            Self::Cz => "cz",
            Self::Cp(_) => "cp",
            Self::Swap => "swap",
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match *self {
            Self::Rz(t) | Self::Ry(t) | Self::Cp(t) => Some(t),
            _ => None,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Self::Cx | Self::Cz | Self::Cp(_) | Self::Swap => 2,
            _ => 1,
        }
    }

    /// Single-qubit matrix, `None` for two-qubit gates.
    pub fn matrix1(&self) -> Option<Mat2> {
        let h = FRAC_1_SQRT_2;
        Some(match *self {
            Self::H => [[C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]],
            Self::X => [[ZERO, ONE], [ONE, ZERO]],
            Self::Y => [[ZERO, -I], [I, ZERO]],
            Self::Z => [[ONE, ZERO], [ZERO, -ONE]],
            Self::S => [[ONE, ZERO], [ZERO, I]],
            Self::Sdg => [[ONE, ZERO], [ZERO, -I]],
            Self::Rz(t) => [[C64::from_polar(1.0, -t / 2.0), ZERO], [ZERO, C64::from_polar(1.0, t / 2.0)]],
            Self::Ry(t) => {
                let (s, c) = (t / 2.0).sin_cos();
                [[linalg::re(c), linalg::re(-s)], [linalg::re(s), linalg::re(c)]]
            }
            _ => return None,
        })
    }

    /// Two-qubit matrix, `None` for single-qubit gates.
    pub fn matrix2(&self) -> Option<Mat4> {
        Some(match *self {
            Self::Cx => linalg::controlled(&Self::X.matrix1()?),
            Self::Cz => linalg::controlled(&Self::Z.matrix1()?),
            Self::Cp(t) => linalg::controlled(&[[ONE, ZERO], [ZERO, C64::from_polar(1.0, t)]]),
            Self::Swap => {
                let mut m = [[ZERO; 4]; 4];
                m[0][0] = ONE;
                m[1][2] = ONE;
                m[2][1] = ONE;
                m[3][3] = ONE;
                m
            }
            _ => return None,
        })
    }

    pub fn on(&self, qubits: &[usize]) -> Result<Gate, CircuitError> {
        if qubits.len() != self.arity() {
            return Err(CircuitError::BadArity { name: self.name().into(), expected: self.arity(), got: qubits.len() });
        }
        if let Some(t) = self.theta() {
            if !t.is_finite() {
                return Err(CircuitError::BadAngle(self.name().into()));
            }
        }
        let gate = match (self.matrix1(), self.matrix2()) {
            (Some(m), _) => Gate::single(self.name(), m, qubits[0])?,
            (_, Some(m)) => Gate::pair(self.name(), m, [qubits[0], qubits[1]])?,
            _ => unreachable!(),
        };
        Ok(gate.with_theta(self.theta()))
    }
}

/// Looks up a named gate and binds it to `qubits`.
pub fn standard_gate(name: &str, theta: Option<f64>, qubits: &[usize]) -> Result<Instruction, CircuitError> {
    Ok(Instruction::Gate(StandardGate::parse(name, theta)?.on(qubits)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    num_clbits: usize,
    instructions: Vec<Instruction>,
    qubit_labels: Option<Vec<String>>,
    written: Vec<bool>,
}

impl Circuit {
    pub fn new(num_qubits: usize, num_clbits: usize) -> Self {
        Self { num_qubits, num_clbits, instructions: Vec::new(), qubit_labels: None, written: vec![false; num_clbits] }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.qubit_labels = Some(labels);
        self
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_clbits(&self) -> usize {
        self.num_clbits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn qubit_labels(&self) -> Option<&[String]> {
        self.qubit_labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Grows the classical register by one bit and returns its index.
    pub fn add_clbit(&mut self) -> usize {
        self.num_clbits += 1;
        self.written.push(false);
        self.num_clbits - 1
    }

    pub fn is_written(&self, clbit: usize) -> bool {
        self.written.get(clbit).copied().unwrap_or(false)
    }

    /// True if any instruction so far touches `qubit`.
    pub fn touches(&self, qubit: usize) -> bool {
        self.instructions.iter().any(|i| i.qubits().contains(&qubit))
    }

    fn check_qubit(&self, q: usize) -> Result<(), CircuitError> {
        if q >= self.num_qubits {
            return Err(CircuitError::IndexOutOfRange { what: "qubit", index: q, size: self.num_qubits });
        }
        Ok(())
    }

    fn check_clbit(&self, c: usize) -> Result<(), CircuitError> {
        if c >= self.num_clbits {
            return Err(CircuitError::IndexOutOfRange { what: "classical bit", index: c, size: self.num_clbits });
        }
        Ok(())
    }

    fn check_gate(&self, gate: &Gate) -> Result<(), CircuitError> {
        match &gate.op {
            GateOp::Single { qubit, matrix } => {
                self.check_qubit(*qubit)?;
                let defect = linalg::unitarity_defect(matrix);
                if !(defect <= UNITARITY_TOL) {
                    return Err(CircuitError::NonUnitaryMatrix { name: gate.name.clone(), defect });
                }
            }
            GateOp::Pair { qubits, matrix } => {
                self.check_qubit(qubits[0])?;
                self.check_qubit(qubits[1])?;
                if qubits[0] == qubits[1] {
                    return Err(CircuitError::RepeatedQubit(gate.name.clone()));
                }
                let defect = linalg::unitarity_defect(matrix);
                if !(defect <= UNITARITY_TOL) {
                    return Err(CircuitError::NonUnitaryMatrix { name: gate.name.clone(), defect });
                }
            }
        }
        Ok(())
    }

    /// Validates and appends one instruction.
    pub fn push(&mut self, instr: Instruction) -> Result<&mut Self, CircuitError> {
        match &instr {
            Instruction::Gate(g) => self.check_gate(g)?,
            Instruction::Measure { qubit, clbit } => {
                self.check_qubit(*qubit)?;
                self.check_clbit(*clbit)?;
                if self.written[*clbit] {
                    return Err(CircuitError::ClbitAlreadyWritten(*clbit));
                }
            }
            Instruction::Reset { qubit } => self.check_qubit(*qubit)?,
            Instruction::Conditional { clbit, gate } => {
                self.check_clbit(*clbit)?;
                if !self.written[*clbit] {
                    return Err(CircuitError::ConditionalOnUnwrittenBit(*clbit));
                }
                self.check_gate(gate)?;
            }
            Instruction::Barrier { .. } => {}
        }
        if let Instruction::Measure { clbit, .. } = instr {
            self.written[clbit] = true;
        }
        self.instructions.push(instr);
        Ok(self)
    }

    pub fn gate(&mut self, g: StandardGate, qubits: &[usize]) -> Result<&mut Self, CircuitError> {
        let gate = g.on(qubits)?;
        self.push(Instruction::Gate(gate))
    }

    pub fn h(&mut self, q: usize) -> Result<&mut Self, CircuitError> {
        self.gate(StandardGate::H, &[q])
    }

    pub fn x(&mut self, q: usize) -> Result<&mut Self, CircuitError> {
        self.gate(StandardGate::X, &[q])
    }

    pub fn z(&mut self, q: usize) -> Result<&mut Self, CircuitError> {
        self.gate(StandardGate::Z, &[q])
    }

    pub fn cx(&mut self, control: usize, target: usize) -> Result<&mut Self, CircuitError> {
        self.gate(StandardGate::Cx, &[control, target])
    }

    pub fn cz(&mut self, a: usize, b: usize) -> Result<&mut Self, CircuitError> {
        self.gate(StandardGate::Cz, &[a, b])
    }

    pub fn reset(&mut self, q: usize) -> Result<&mut Self, CircuitError> {
        self.push(Instruction::Reset { qubit: q })
    }

    pub fn barrier(&mut self, label: impl Into<String>) -> Result<&mut Self, CircuitError> {
        self.push(Instruction::Barrier { label: label.into() })
    }

    pub fn measure(&mut self, qubit: usize, clbit: usize) -> Result<&mut Self, CircuitError> {
        self.push(Instruction::Measure { qubit, clbit })
    }

    /// Measures `qubit` into a newly allocated classical bit.
    pub fn measure_fresh(&mut self, qubit: usize) -> Result<usize, CircuitError> {
        self.check_qubit(qubit)?;
        let c = self.add_clbit();
        self.measure(qubit, c)?;
        Ok(c)
    }

    pub fn conditional(&mut self, clbit: usize, gate: Gate) -> Result<&mut Self, CircuitError> {
        self.push(Instruction::Conditional { clbit, gate })
    }

    /// Serialises to the circuit JSON interchange format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&WireCircuit::from(self)).expect("circuit serialisation is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        let wire: WireCircuit = serde_json::from_str(text)?;
        wire.into_circuit()
    }
}

type WireMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Serialize, Deserialize)]
struct WireInstruction {
    kind: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    qubits: Vec<usize>,
    #[serde(default)]
    clbits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<WireMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct WireCircuit {
    num_qubits: usize,
    num_clbits: usize,
    instructions: Vec<WireInstruction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    qubit_labels: Option<Vec<String>>,
}

fn matrix_to_wire<const N: usize>(m: &[[C64; N]; N]) -> WireMatrix {
    m.iter().map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect()
}

fn matrix_from_wire<const N: usize>(w: &WireMatrix) -> Result<[[C64; N]; N], CircuitError> {
    if w.len() != N || w.iter().any(|row| row.len() != N) {
        return Err(CircuitError::Malformed(format!("expected a {N}x{N} matrix")));
    }
    let mut m = [[ZERO; N]; N];
    for (r, row) in w.iter().enumerate() {
        for (c, z) in row.iter().enumerate() {
            m[r][c] = C64::new(z[0], z[1]);
        }
    }
    Ok(m)
}

fn gate_to_wire(kind: &str, gate: &Gate, clbits: Vec<usize>) -> WireInstruction {
    let matrix = match &gate.op {
        GateOp::Single { matrix, .. } => matrix_to_wire(matrix),
        GateOp::Pair { matrix, .. } => matrix_to_wire(matrix),
    };
    WireInstruction {
        kind: kind.into(),
        name: gate.name.clone(),
        qubits: gate.qubits(),
        clbits,
        matrix: Some(matrix),
        theta: gate.theta,
    }
}

fn gate_from_wire(w: &WireInstruction) -> Result<Gate, CircuitError> {
    let gate = match (&w.matrix, w.qubits.as_slice()) {
        (Some(m), &[q]) => Gate::single(w.name.clone(), matrix_from_wire::<2>(m)?, q)?,
        (Some(m), &[a, b]) => Gate::pair(w.name.clone(), matrix_from_wire::<4>(m)?, [a, b])?,
        (None, qs) => StandardGate::parse(&w.name, w.theta)?.on(qs)?,
        (Some(_), qs) => {
            return Err(CircuitError::Malformed(format!("gate `{}` on {} qubits", w.name, qs.len())));
        }
    };
    Ok(gate.with_theta(w.theta))
}

impl From<&Circuit> for WireCircuit {
    fn from(c: &Circuit) -> Self {
        let instructions = c
            .instructions
            .iter()
            .map(|i| match i {
                Instruction::Gate(g) => {
                    let kind = if g.qubits().len() == 1 { "gate1" } else { "gate2" };
                    gate_to_wire(kind, g, Vec::new())
                }
                Instruction::Conditional { clbit, gate } => gate_to_wire("conditional", gate, vec![*clbit]),
                Instruction::Measure { qubit, clbit } => WireInstruction {
                    kind: "measure".into(),
                    name: "measure".into(),
                    qubits: vec![*qubit],
                    clbits: vec![*clbit],
                    matrix: None,
                    theta: None,
                },
                Instruction::Reset { qubit } => WireInstruction {
                    kind: "reset".into(),
                    name: "reset".into(),
                    qubits: vec![*qubit],
                    clbits: Vec::new(),
                    matrix: None,
                    theta: None,
                },
                Instruction::Barrier { label } => WireInstruction {
                    kind: "barrier".into(),
                    name: label.clone(),
                    qubits: Vec::new(),
                    clbits: Vec::new(),
                    matrix: None,
                    theta: None,
                },
            })
            .collect();
        WireCircuit {
            num_qubits: c.num_qubits,
            num_clbits: c.num_clbits,
            instructions,
            qubit_labels: c.qubit_labels.clone(),
        }
    }
}

impl WireCircuit {
    fn into_circuit(self) -> Result<Circuit, CircuitError> {
        let mut circuit = Circuit::new(self.num_qubits, self.num_clbits);
        circuit.qubit_labels = self.qubit_labels;
        for w in &self.instructions {
            let one = |v: &[usize], what: &str| -> Result<usize, CircuitError> {
                match v {
                    &[x] => Ok(x),
                    _ => Err(CircuitError::Malformed(format!("`{}` needs exactly one {what}", w.kind))),
                }
            };
            let instr = match w.kind.as_str() {
                "gate1" | "gate2" => Instruction::Gate(gate_from_wire(w)?),
                "conditional" => Instruction::Conditional { clbit: one(&w.clbits, "clbit")?, gate: gate_from_wire(w)? },
                "measure" => Instruction::Measure { qubit: one(&w.qubits, "qubit")?, clbit: one(&w.clbits, "clbit")? },
                "reset" => Instruction::Reset { qubit: one(&w.qubits, "qubit")? },
                "barrier" => Instruction::Barrier { label: w.name.clone() },
                other => return Err(CircuitError::Malformed(format!("unknown instruction kind `{other}`"))),
            };
            circuit.push(instr)?;
        }
        Ok(circuit)
    }
}
