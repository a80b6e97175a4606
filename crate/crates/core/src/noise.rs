// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Collision-model interconnect noise.
//!
//! Each collision couples a communication qubit to a fresh environment qubit
//! through H = κ(σ₊⊗σ₋ + σ₋⊗σ₊) for a time `dt`, after which the environment
//! is reset and reused. Traced over the environment, one collision is an
//! amplitude-damping channel with η = sin²(κ·dt).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, Instruction};
use crate::linalg::{self, Mat2, Mat4, C64, ONE, ZERO};

/// Name given to collision gates inside circuits.
pub const COLLISION_GATE: &str = "collision";

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("coupling must be non-negative and finite, got {0}")]
    NegativeCoupling(f64),
    #[error("collision duration must be positive and finite, got {0}")]
    NonPositiveDuration(f64),
    #[error("attenuation must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("qubit role violation: {0}")]
    QubitRoleViolation(String),
    #[error("unknown fiber type `{0}`")]
    UnknownFiber(String),
    #[error("fiber catalog: {0}")]
    Catalog(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

fn check_coupling(kappa: f64, dt: f64) -> Result<(), NoiseError> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(NoiseError::NegativeCoupling(kappa));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(NoiseError::NonPositiveDuration(dt));
    }
    Ok(())
}

/// exp(−iH·dt) on (system, environment), in closed form.
///
/// Identity on |00⟩ and |11⟩; on {|01⟩, |10⟩} the rotation
/// [[cos θ, −i sin θ], [−i sin θ, cos θ]] with θ = κ·dt.
pub fn collision_unitary(kappa: f64, dt: f64) -> Result<Mat4, NoiseError> {
    check_coupling(kappa, dt)?;
    let (s, c) = (kappa * dt).sin_cos();
    let mut u = [[ZERO; 4]; 4];
    u[0][0] = ONE;
    u[3][3] = ONE;
    u[1][1] = linalg::re(c);
    u[2][2] = linalg::re(c);
    u[1][2] = C64::new(0.0, -s);
    u[2][1] = C64::new(0.0, -s);
    Ok(u)
}

/// η = sin²(κ·dt), the single-collision damping probability.
pub fn damping_parameter(kappa: f64, dt: f64) -> Result<f64, NoiseError> {
    check_coupling(kappa, dt)?;
    Ok((kappa * dt).sin().powi(2))
}

/// {[[1,0],[0,√(1−η)]], [[0,√η],[0,0]]}
pub fn amplitude_damping_kraus(eta: f64) -> [Mat2; 2] {
    [
        [[ONE, ZERO], [ZERO, linalg::re((1.0 - eta).sqrt())]],
        [[ZERO, linalg::re(eta.sqrt())], [ZERO, ZERO]],
    ]
}

/// Excited-state survival after `n` collisions with fresh ground-state environments.
pub fn analytic_excited_population(n: u32, kappa: f64, dt: f64) -> f64 {
    (kappa * dt).cos().powi(2 * n as i32)
}

/// Continuum (Lindblad) limit of the iterated collisions: e^{−n(κ·dt)²}.
pub fn lindblad_excited_population(n: u32, kappa: f64, dt: f64) -> f64 {
    (-(n as f64) * (kappa * dt).powi(2)).exp()
}

/// Fiber length covered by `n` collisions: D = κ²·n / α (km).
pub fn distance_for_steps(n: u32, kappa: f64, alpha: f64) -> Result<f64, NoiseError> {
    if !(alpha > 0.0) {
        return Err(NoiseError::NonPositiveAlpha(alpha));
    }
    Ok(kappa * kappa * f64::from(n) / alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FiberType {
    G652D,
    G654D,
    G655D,
    Custom { name: String, alpha: f64 },
}

impl FiberType {
    pub const BUILTIN: [FiberType; 3] = [FiberType::G652D, FiberType::G654D, FiberType::G655D];

    /// Attenuation constant in km⁻¹.
    pub fn alpha(&self) -> f64 {
        match self {
            FiberType::G652D => 0.0415,
            FiberType::G654D => 0.0392,
            FiberType::G655D => 0.0507,
            FiberType::Custom { alpha, .. } => *alpha,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            FiberType::G652D => "G652D",
            FiberType::G654D => "G654D",
            FiberType::G655D => "G655D",
            FiberType::Custom { name, .. } => name,
        }
    }

    /// Accepts `G652D`, `G-652-D`, `G.652.D` and friends. `G654E` maps onto
    /// the G654D entry.
    pub fn builtin(name: &str) -> Option<Self> {
        let key: String = name.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_uppercase();
        match key.as_str() {
            "G652D" => Some(FiberType::G652D),
            "G654D" | "G654E" => Some(FiberType::G654D),
            "G655D" => Some(FiberType::G655D),
            _ => None,
        }
    }

    pub fn custom(alpha: f64) -> Self {
        FiberType::Custom { name: "custom".into(), alpha }
    }
}

impl fmt::Display for FiberType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FiberRepr {
    Name(String),
    Custom { custom: f64, #[serde(default)] name: Option<String> },
}

impl Serialize for FiberType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            FiberType::Custom { name, alpha } => {
                FiberRepr::Custom { custom: *alpha, name: Some(name.clone()) }.serialize(s)
            }
            other => FiberRepr::Name(other.name().into()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for FiberType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match FiberRepr::deserialize(d)? {
            FiberRepr::Name(n) => FiberType::builtin(&n)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown fiber type `{n}`"))),
            FiberRepr::Custom { custom, name } => {
                Ok(FiberType::Custom { name: name.unwrap_or_else(|| "custom".into()), alpha: custom })
            }
        }
    }
}

/// Named attenuation table, `{name → alpha_per_km}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiberCatalog {
    entries: BTreeMap<String, f64>,
}

impl Default for FiberCatalog {
    fn default() -> Self {
        let entries = FiberType::BUILTIN.iter().map(|f| (f.name().to_string(), f.alpha())).collect();
        Self { entries }
    }
}

impl FiberCatalog {
    pub fn from_json(text: &str) -> Result<Self, NoiseError> {
        let cat: FiberCatalog = serde_json::from_str(text).map_err(|e| NoiseError::Catalog(e.to_string()))?;
        for (name, &alpha) in &cat.entries {
            if !(alpha > 0.0) {
                return Err(NoiseError::Catalog(format!("`{name}` has non-positive alpha {alpha}")));
            }
        }
        Ok(cat)
    }

    pub fn load(path: &Path) -> Result<Self, NoiseError> {
        let text = std::fs::read_to_string(path).map_err(|e| NoiseError::Catalog(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Built-in spellings resolve to the standard entries; anything else must be in the table.
    pub fn resolve(&self, name: &str) -> Result<FiberType, NoiseError> {
        if let Some(alpha) = self.entries.get(name) {
            if let Some(b) = FiberType::builtin(name).filter(|b| b.alpha() == *alpha) {
                return Ok(b);
            }
            return Ok(FiberType::Custom { name: name.to_string(), alpha: *alpha });
        }
        FiberType::builtin(name).ok_or_else(|| NoiseError::UnknownFiber(name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberSide {
    /// Only the receiving communication qubit sees fiber collisions.
    #[default]
    ReceiverOnly,
    Symmetric,
}

/// Parameters of one interconnect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseLinkSpec {
    pub kappa_transducer: f64,
    pub kappa_fiber: f64,
    pub dt: f64,
    pub fiber_steps: u32,
    /// Transducer collisions per side.
    pub transducer_collisions: u32,
    pub fiber_side: FiberSide,
    pub fiber_type: FiberType,
}

impl Default for NoiseLinkSpec {
    fn default() -> Self {
        Self {
            kappa_transducer: 0.1,
            kappa_fiber: 0.1,
            dt: 1.0,
            fiber_steps: 0,
            transducer_collisions: 1,
            fiber_side: FiberSide::ReceiverOnly,
            fiber_type: FiberType::G652D,
        }
    }
}

impl NoiseLinkSpec {
    /// A link that adds no collisions at all.
    pub fn noiseless() -> Self {
        Self { fiber_steps: 0, transducer_collisions: 0, ..Self::default() }
    }

    pub fn with_steps(mut self, steps: u32) -> Self {
        self.fiber_steps = steps;
        self
    }

    pub fn with_fiber(mut self, fiber: FiberType) -> Self {
        self.fiber_type = fiber;
        self
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        check_coupling(self.kappa_transducer, self.dt)?;
        check_coupling(self.kappa_fiber, self.dt)?;
        if !(self.fiber_type.alpha() > 0.0) {
            return Err(NoiseError::NonPositiveAlpha(self.fiber_type.alpha()));
        }
        Ok(())
    }

    pub fn distance_km(&self) -> Result<f64, NoiseError> {
        distance_for_steps(self.fiber_steps, self.kappa_fiber, self.fiber_type.alpha())
    }

    pub fn is_noiseless(&self) -> bool {
        let silent = |k: f64| k * self.dt == 0.0;
        (self.transducer_collisions == 0 || silent(self.kappa_transducer))
            && (self.fiber_steps == 0 || silent(self.kappa_fiber))
    }
}

/// Communication and environment qubits on both ends of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkQubits {
    pub comm_a: usize,
    pub env_a: usize,
    pub comm_b: usize,
    pub env_b: usize,
}

fn collision_gate(kappa: f64, dt: f64, comm: usize, env: usize) -> Result<Gate, NoiseError> {
    let mut g = Gate::pair(COLLISION_GATE, collision_unitary(kappa, dt)?, [comm, env])?;
    g.theta = Some(kappa * dt);
    Ok(g)
}

fn is_noise_instruction(instr: &Instruction) -> bool {
    match instr {
        Instruction::Gate(g) => g.name == COLLISION_GATE,
        Instruction::Reset { .. } | Instruction::Barrier { .. } => true,
        _ => false,
    }
}

/// Appends the transducer and fiber collisions of one link.
///
/// Per side: `transducer_collisions` × (collision with κ_T, reset env). Then
/// `fiber_steps` × (collision with κ_F, reset env) on the receiver (B) side,
/// or on both sides when the link is symmetric.
pub fn insert_link_noise(circuit: &mut Circuit, link: LinkQubits, spec: &NoiseLinkSpec) -> Result<(), NoiseError> {
    spec.validate()?;
    let LinkQubits { comm_a, env_a, comm_b, env_b } = link;
    let distinct = [comm_a, env_a, comm_b, env_b];
    for (i, a) in distinct.iter().enumerate() {
        if distinct[i + 1..].contains(a) {
            return Err(NoiseError::QubitRoleViolation(format!("qubit {a} serves two link roles")));
        }
    }
    for env in [env_a, env_b] {
        let misuse = circuit
            .instructions()
            .iter()
            .any(|instr| instr.qubits().contains(&env) && !is_noise_instruction(instr));
        if misuse {
            return Err(NoiseError::QubitRoleViolation(format!(
                "environment qubit {env} is also used by a processing or communication instruction"
            )));
        }
    }
    let mut collide = |kappa: f64, comm: usize, env: usize| -> Result<(), NoiseError> {
        circuit.push(Instruction::Gate(collision_gate(kappa, spec.dt, comm, env)?))?;
        circuit.reset(env)?;
        Ok(())
    };
    for (comm, env) in [(comm_a, env_a), (comm_b, env_b)] {
        for _ in 0..spec.transducer_collisions {
            collide(spec.kappa_transducer, comm, env)?;
        }
    }
    let fiber_sides: &[(usize, usize)] = match spec.fiber_side {
        FiberSide::ReceiverOnly => &[(comm_b, env_b)],
        FiberSide::Symmetric => &[(comm_a, env_a), (comm_b, env_b)],
    };
    for &(comm, env) in fiber_sides {
        for _ in 0..spec.fiber_steps {
            collide(spec.kappa_fiber, comm, env)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::choi::{choi_of_circuit, choi_of_kraus};
    use crate::engine::{evolve_exact, DensityMatrix};
    use crate::exec::Exec;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    /// Padé-free oracle: exp(−iH) by Taylor series on the 4×4 Hamiltonian.
    fn expm_taylor(h: &Mat4, dt: f64) -> Mat4 {
        let mut term = linalg::identity::<4>();
        let mut sum = term;
        let step: Mat4 = {
            let mut m = *h;
            m.iter_mut().flatten().for_each(|z| *z *= C64::new(0.0, -dt));
            m
        };
        for k in 1..60 {
            term = linalg::matmul(&term, &step);
            term.iter_mut().flatten().for_each(|z| *z /= k as f64);
            for r in 0..4 {
                for c in 0..4 {
                    sum[r][c] += term[r][c];
                }
            }
        }
        sum
    }

    fn hamiltonian(kappa: f64) -> Mat4 {
        let sp: Mat2 = [[ZERO, ZERO], [ONE, ZERO]]; // σ₊|0⟩ = |1⟩
        let sm: Mat2 = [[ZERO, ONE], [ZERO, ZERO]];
        let a = linalg::kron2(&sp, &sm);
        let b = linalg::kron2(&sm, &sp);
        let mut h = [[ZERO; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                h[r][c] = (a[r][c] + b[r][c]) * kappa;
            }
        }
        h
    }

    #[test]
    fn zero_coupling_is_identity() {
        let u = collision_unitary(0.0, 1.0).unwrap();
        assert_eq!(u, linalg::identity::<4>());
    }

    #[test]
    fn quarter_turn_swaps_excitation() {
        let u = collision_unitary(FRAC_PI_2, 1.0).unwrap();
        // |10⟩ (system excited) is local index 2
        assert!((u[1][2] - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(u[2][2].norm() < 1e-15);
    }

    #[test]
    fn closed_form_matches_matrix_exponential() {
        for kappa in [0.1, 0.5, 1.3] {
            let closed = collision_unitary(kappa, 1.0).unwrap();
            let oracle = expm_taylor(&hamiltonian(kappa), 1.0);
            assert!(linalg::max_abs_diff(&closed, &oracle) < 1e-13);
        }
        let u = collision_unitary(0.1, 1.0).unwrap();
        assert!((u[2][2].re - 0.1f64.cos()).abs() < 1e-15);
        assert!((u[1][2].im + 0.1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn unitary_and_block_structure() {
        for kdt in [0.0, 0.1, 0.5, FRAC_PI_4, FRAC_PI_2, 2.0] {
            let u = collision_unitary(kdt, 1.0).unwrap();
            assert!(linalg::unitarity_defect(&u) < 1e-12);
            assert_eq!(u[0][0], ONE);
            assert_eq!(u[3][3], ONE);
            for k in 1..4 {
                assert_eq!(u[0][k], ZERO);
                assert_eq!(u[3][k - 1], ZERO);
            }
        }
    }

    #[test]
    fn negative_coupling_rejected() {
        assert!(matches!(collision_unitary(-0.1, 1.0), Err(NoiseError::NegativeCoupling(_))));
        assert!(matches!(collision_unitary(0.1, 0.0), Err(NoiseError::NonPositiveDuration(_))));
    }

    #[test]
    fn damping_parameter_values() {
        assert_eq!(damping_parameter(0.0, 1.0).unwrap(), 0.0);
        assert!((damping_parameter(FRAC_PI_2, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let eta = damping_parameter(0.1, 1.0).unwrap();
        assert!((eta - 0.0099667).abs() < 1e-7);
    }

    #[test]
    fn single_collision_channel_equals_kraus_channel() {
        for kdt in [0.0, 0.1, 0.5, FRAC_PI_4, FRAC_PI_2] {
            let mut c = Circuit::new(2, 0);
            c.push(Instruction::Gate(collision_gate(kdt, 1.0, 0, 1).unwrap())).unwrap();
            let j_circuit = choi_of_circuit(&c, &[0], &[0], Exec::Sequential).unwrap();
            let j_kraus = choi_of_kraus(&amplitude_damping_kraus(damping_parameter(kdt, 1.0).unwrap()));
            assert!(j_circuit.max_abs_diff(&j_kraus) < 1e-10, "κ·dt = {kdt}");
        }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance_for_steps(0, 0.1, 0.0415).unwrap(), 0.0);
        assert!((distance_for_steps(1, 0.1, 0.0415).unwrap() - 0.2410).abs() < 5e-5);
        assert!((distance_for_steps(10, 0.1, 0.0392).unwrap() - 2.551).abs() < 5e-4);
        assert!(matches!(distance_for_steps(1, 0.1, 0.0), Err(NoiseError::NonPositiveAlpha(_))));
        for n in 0..50 {
            let one = distance_for_steps(n, 0.1, 0.0507).unwrap();
            assert_eq!(distance_for_steps(2 * n, 0.1, 0.0507).unwrap(), 2.0 * one);
        }
    }

    #[test]
    fn analytic_population_examples() {
        assert_eq!(analytic_excited_population(0, 0.1, 1.0), 1.0);
        let one = analytic_excited_population(1, 0.1, 1.0);
        assert!((one - 0.990033).abs() < 1e-6);
        assert!((one - (1.0 - damping_parameter(0.1, 1.0).unwrap())).abs() < 1e-15);
        assert!((analytic_excited_population(100, 0.01, 1.0) - (-0.01f64).exp()).abs() < 1e-4);
    }

    fn link() -> LinkQubits {
        LinkQubits { comm_a: 0, env_a: 1, comm_b: 2, env_b: 3 }
    }

    #[test]
    fn insertion_counts() {
        let mut c = Circuit::new(4, 0);
        insert_link_noise(&mut c, link(), &NoiseLinkSpec::noiseless()).unwrap();
        assert!(c.is_empty());

        let mut c = Circuit::new(4, 0);
        insert_link_noise(&mut c, link(), &NoiseLinkSpec::default().with_steps(1)).unwrap();
        let collisions = c.instructions().iter().filter(|i| matches!(i, Instruction::Gate(g) if g.name == COLLISION_GATE));
        assert_eq!(collisions.count(), 3);
        let resets = c.instructions().iter().filter(|i| matches!(i, Instruction::Reset { .. })).count();
        assert_eq!(resets, 3);

        let mut c = Circuit::new(4, 0);
        let spec = NoiseLinkSpec { fiber_side: FiberSide::Symmetric, ..NoiseLinkSpec::default().with_steps(2) };
        insert_link_noise(&mut c, link(), &spec).unwrap();
        assert_eq!(c.len(), 2 * (2 + 4));
    }

    #[test]
    fn role_violations() {
        let mut c = Circuit::new(4, 0);
        let bad = LinkQubits { comm_a: 0, env_a: 0, comm_b: 2, env_b: 3 };
        assert!(matches!(insert_link_noise(&mut c, bad, &NoiseLinkSpec::default()), Err(NoiseError::QubitRoleViolation(_))));
        let mut c = Circuit::new(4, 0);
        c.h(1).unwrap();
        assert!(matches!(insert_link_noise(&mut c, link(), &NoiseLinkSpec::default()), Err(NoiseError::QubitRoleViolation(_))));
    }

    #[test]
    fn transducer_noise_on_bell_pair_matches_kraus_oracle() {
        let mut c = Circuit::new(4, 0);
        c.h(0).unwrap().cx(0, 2).unwrap();
        let spec = NoiseLinkSpec::default();
        insert_link_noise(&mut c, link(), &spec).unwrap();
        let pair = evolve_exact(&c, None).unwrap().reduce_to(&[0, 2]).unwrap();

        let mut oracle = DensityMatrix::from_pure(&{
            let s = std::f64::consts::FRAC_1_SQRT_2;
            [linalg::re(s), ZERO, ZERO, linalg::re(s)]
        })
        .unwrap();
        let k = amplitude_damping_kraus(0.1f64.sin().powi(2));
        oracle.apply_kraus(0, &k).unwrap();
        oracle.apply_kraus(1, &k).unwrap();
        assert!(pair.max_abs_diff(&oracle) < 1e-12);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = [linalg::re(s), ZERO, ZERO, linalg::re(s)];
        let f = pair.overlap_with_pure(&phi).unwrap();
        let p = pair.probabilities();
        assert!(f < 1.0);
        assert!(p[0] + p[3] > 0.98);
    }

    #[test]
    fn catalog_defaults_and_aliases() {
        let cat = FiberCatalog::default();
        assert_eq!(cat.resolve("G-654-E").unwrap(), FiberType::G654D);
        assert_eq!(cat.resolve("G.652.D").unwrap().alpha(), 0.0415);
        assert_eq!(cat.resolve("G655D").unwrap().alpha(), 0.0507);
        assert!(matches!(cat.resolve("G999"), Err(NoiseError::UnknownFiber(_))));

        let custom = FiberCatalog::from_json(r#"{"ULL": 0.035}"#).unwrap();
        assert_eq!(custom.resolve("ULL").unwrap(), FiberType::Custom { name: "ULL".into(), alpha: 0.035 });
        assert!(FiberCatalog::from_json(r#"{"bad": 0.0}"#).is_err());
    }

    #[test]
    fn fiber_type_serde() {
        let t: FiberType = serde_json::from_str("\"G-654-D\"").unwrap();
        assert_eq!(t, FiberType::G654D);
        let t: FiberType = serde_json::from_str(r#"{"custom": 0.02}"#).unwrap();
        assert_eq!(t.alpha(), 0.02);
        let back: FiberType = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
