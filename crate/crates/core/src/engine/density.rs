// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

use crate::circuit::{Gate, GateOp};
use crate::linalg::{self, Mat2, C64, ONE, ZERO};

use super::EngineError;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const MIN_EIGEN_TOL: f64 = -1e-9;
/// Largest register the dense engine accepts.
pub const MAX_QUBITS: usize = 12;

/// Dense density matrix over `num_qubits` qubits, stored row-major.
///
/// Basis index bit `q` is the value of qubit `q`. The type also serves as a
/// plain linear operator when built through [`DensityMatrix::from_operator`],
/// which the channel (Choi) machinery relies on.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    /// |0…0⟩⟨0…0|
    pub fn zero_state(num_qubits: usize) -> Self {
        Self::basis_state(num_qubits, 0)
    }

    pub fn basis_state(num_qubits: usize, index: usize) -> Self {
        let dim = 1usize << num_qubits;
        assert!(index < dim, "basis index {index} outside a {num_qubits}-qubit register");
        let mut data = vec![ZERO; dim * dim];
        data[index * dim + index] = ONE;
        Self { num_qubits, data }
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let mut data = vec![ZERO; dim * dim];
        for k in 0..dim {
            data[k * dim + k] = linalg::re(1.0 / dim as f64);
        }
        Self { num_qubits, data }
    }

    /// |ψ⟩⟨ψ| from a normalised amplitude vector.
    pub fn from_pure(amplitudes: &[C64]) -> Result<Self, EngineError> {
        let num_qubits = qubits_for_dim(amplitudes.len())?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(EngineError::InvalidState(format!("state vector norm² {norm}")));
        }
        let dim = amplitudes.len();
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = amplitudes[r] * amplitudes[c].conj();
            }
        }
        Ok(Self { num_qubits, data })
    }

    /// Validated construction from a row-major matrix.
    pub fn from_matrix(data: Vec<C64>) -> Result<Self, EngineError> {
        let rho = Self::from_operator(data)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps an arbitrary square operator without density-matrix checks.
    pub fn from_operator(data: Vec<C64>) -> Result<Self, EngineError> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(EngineError::InvalidState(format!("{} entries do not form a square matrix", data.len())));
        }
        let num_qubits = qubits_for_dim(dim)?;
        Ok(Self { num_qubits, data })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn trace(&self) -> C64 {
        let dim = self.dim();
        (0..dim).map(|k| self.data[k * dim + k]).sum()
    }

    /// Diagonal of the matrix: computational-basis probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|k| self.data[k * dim + k].re).collect()
    }

    /// Outcome distribution of the listed qubits; `qubits[i]` becomes bit `i`
    /// of the returned index.
    pub fn marginal(&self, qubits: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << qubits.len()];
        for (idx, p) in self.probabilities().into_iter().enumerate() {
            let key = qubits.iter().enumerate().fold(0usize, |acc, (i, &q)| acc | (((idx >> q) & 1) << i));
            out[key] += p;
        }
        out
    }

    /// ‖ρ − ρ†‖_max
    pub fn hermiticity_defect(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.data[r * dim + c] - self.data[c * dim + r].conj()).norm());
            }
        }
        worst
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigen(&self.data, self.dim()).0
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let herm = self.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(EngineError::InvalidState(format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(EngineError::InvalidState(format!("trace {tr}")));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < MIN_EIGEN_TOL {
            return Err(EngineError::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<(), EngineError> {
        if q >= self.num_qubits {
            return Err(EngineError::QubitOutOfRange { qubit: q, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    /// ρ → UρU† for a circuit gate.
    pub fn apply_gate(&mut self, gate: &Gate) {
        match &gate.op {
            GateOp::Single { qubit, matrix } => self.apply_unitary(&[*qubit], matrix),
            GateOp::Pair { qubits, matrix } => self.apply_unitary(qubits, matrix),
        }
    }

    /// ρ → UρU† where `qubits[0]` is the most significant local index of `u`.
    pub fn apply_unitary<const N: usize>(&mut self, qubits: &[usize], u: &[[C64; N]; N]) {
        self.left_multiply(qubits, u);
        self.right_multiply_dagger(qubits, u);
    }

    /// ρ → Uρ
    pub(crate) fn left_multiply<const N: usize>(&mut self, qubits: &[usize], u: &[[C64; N]; N]) {
        let dim = self.dim();
        let (offsets, mask) = local_offsets::<N>(qubits);
        let mut gathered = [ZERO; N];
        for base in (0..dim).filter(|i| i & mask == 0) {
            for col in 0..dim {
                for (g, off) in gathered.iter_mut().zip(&offsets) {
                    *g = self.data[(base | off) * dim + col];
                }
                for (m, off) in offsets.iter().enumerate() {
                    self.data[(base | off) * dim + col] = (0..N).map(|l| u[m][l] * gathered[l]).sum();
                }
            }
        }
    }

    /// ρ → ρU†
    pub(crate) fn right_multiply_dagger<const N: usize>(&mut self, qubits: &[usize], u: &[[C64; N]; N]) {
        let dim = self.dim();
        let (offsets, mask) = local_offsets::<N>(qubits);
        let mut gathered = [ZERO; N];
        for row in self.data.chunks_exact_mut(dim) {
            for base in (0..dim).filter(|i| i & mask == 0) {
                for (g, off) in gathered.iter_mut().zip(&offsets) {
                    *g = row[base | off];
                }
                for (m, off) in offsets.iter().enumerate() {
                    row[base | off] = (0..N).map(|l| gathered[l] * u[m][l].conj()).sum();
                }
            }
        }
    }

    /// Zeroes every entry whose row or column has qubit `q` ≠ `bit`:
    /// ρ → P_bit ρ P_bit (unnormalised).
    pub fn project(&mut self, q: usize, bit: usize) {
        let dim = self.dim();
        let keep = |i: usize| (i >> q) & 1 == bit;
        for r in 0..dim {
            let row_ok = keep(r);
            for c in 0..dim {
                if !(row_ok && keep(c)) {
                    self.data[r * dim + c] = ZERO;
                }
            }
        }
    }

    /// Non-selective Z measurement of qubit `q`: drops coherences across its value.
    pub fn dephase(&mut self, q: usize) {
        let dim = self.dim();
        for r in 0..dim {
            for c in 0..dim {
                if ((r ^ c) >> q) & 1 == 1 {
                    self.data[r * dim + c] = ZERO;
                }
            }
        }
    }

    /// Trace-and-replace reset: ρ → P0ρP0 + X P1ρP1 X.
    pub fn reset(&mut self, q: usize) {
        let dim = self.dim();
        let bit = 1usize << q;
        let mut out = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                if (r ^ c) & bit == 0 {
                    out[(r & !bit) * dim + (c & !bit)] += self.data[r * dim + c];
                }
            }
        }
        self.data = out;
    }

    /// Reduced state on `keep`, with the kept qubits in ascending order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix, EngineError> {
        let mut order = keep.to_vec();
        order.sort_unstable();
        order.dedup();
        self.reduce_to(&order)
    }

    /// Reduced state in which `order[i]` becomes qubit `i`.
    pub fn reduce_to(&self, order: &[usize]) -> Result<DensityMatrix, EngineError> {
        if order.is_empty() {
            return Err(EngineError::EmptyKeepSet);
        }
        for &q in order {
            self.check_qubit(q)?;
        }
        let mut seen = 0usize;
        for &q in order {
            if seen & (1 << q) != 0 {
                return Err(EngineError::InvalidState(format!("qubit {q} listed twice")));
            }
            seen |= 1 << q;
        }
        let dim = self.dim();
        let kept_mask = seen;
        let k = order.len();
        let small = 1usize << k;
        let map = |i: usize| order.iter().enumerate().fold(0usize, |acc, (p, &q)| acc | (((i >> q) & 1) << p));
        let mut out = vec![ZERO; small * small];
        for r in 0..dim {
            let r_rest = r & !kept_mask;
            let rr = map(r);
            for c in 0..dim {
                if c & !kept_mask != r_rest {
                    continue;
                }
                out[rr * small + map(c)] += self.data[r * dim + c];
            }
        }
        Ok(DensityMatrix { num_qubits: k, data: out })
    }

    /// Tensor product with `self` on the low qubits and `high` above them.
    pub fn tensor(&self, high: &DensityMatrix) -> DensityMatrix {
        let (dl, dh) = (self.dim(), high.dim());
        let dim = dl * dh;
        let mut data = vec![ZERO; dim * dim];
        for hr in 0..dh {
            for hc in 0..dh {
                let h = high.data[hr * dh + hc];
                if h == ZERO {
                    continue;
                }
                for lr in 0..dl {
                    for lc in 0..dl {
                        data[(hr * dl + lr) * dim + hc * dl + lc] = h * self.data[lr * dl + lc];
                    }
                }
            }
        }
        DensityMatrix { num_qubits: self.num_qubits + high.num_qubits, data }
    }

    /// Tr(ρP) for a Pauli string written most-significant qubit first.
    pub fn expectation(&self, pauli: &str) -> Result<f64, EngineError> {
        let p = PauliString::parse(pauli, self.num_qubits)?;
        Ok(p.expectation(self).re)
    }

    /// ρ → Σ KρK† on one qubit.
    pub fn apply_kraus(&mut self, qubit: usize, kraus: &[Mat2]) -> Result<(), EngineError> {
        self.check_qubit(qubit)?;
        let mut sum = [[ZERO; 2]; 2];
        for k in kraus {
            let kk = linalg::matmul(&linalg::dagger(k), k);
            for r in 0..2 {
                for c in 0..2 {
                    sum[r][c] += kk[r][c];
                }
            }
        }
        let defect = linalg::max_abs_diff(&sum, &linalg::identity::<2>());
        if defect > 1e-10 {
            return Err(EngineError::NonTracePreservingSet { defect });
        }
        let mut acc = vec![ZERO; self.data.len()];
        for k in kraus {
            let mut term = self.clone();
            term.left_multiply(&[qubit], k);
            term.right_multiply_dagger(&[qubit], k);
            for (a, t) in acc.iter_mut().zip(&term.data) {
                *a += t;
            }
        }
        self.data = acc;
        Ok(())
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn overlap_with_pure(&self, psi: &[C64]) -> Result<f64, EngineError> {
        if psi.len() != self.dim() {
            return Err(EngineError::DimensionMismatch { expected: self.dim(), got: psi.len() });
        }
        let dim = self.dim();
        let mut acc = ZERO;
        for r in 0..dim {
            for c in 0..dim {
                acc += psi[r].conj() * self.data[r * dim + c] * psi[c];
            }
        }
        Ok(acc.re)
    }

    /// Largest entrywise distance to another operator of the same size.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub(crate) fn add_assign(&mut self, other: &DensityMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

fn qubits_for_dim(dim: usize) -> Result<usize, EngineError> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(EngineError::InvalidState(format!("dimension {dim} is not a power of two")));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(EngineError::TooManyQubits(n));
    }
    Ok(n)
}

/// Basis-index offsets for each local index of an N×N gate, plus the mask of touched bits.
fn local_offsets<const N: usize>(qubits: &[usize]) -> ([usize; N], usize) {
    let k = qubits.len();
    debug_assert_eq!(1 << k, N);
    let mut offsets = [0usize; N];
    for (m, off) in offsets.iter_mut().enumerate() {
        for (p, &q) in qubits.iter().enumerate() {
            if (m >> (k - 1 - p)) & 1 == 1 {
                *off |= 1 << q;
            }
        }
    }
    let mask = qubits.iter().fold(0, |acc, &q| acc | (1 << q));
    (offsets, mask)
}

/// Pauli string as bit masks: `x` flips, `z` phases, plus the count of Y factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliString {
    pub num_qubits: usize,
    pub x: usize,
    pub z: usize,
}

impl PauliString {
    /// Letters over {I,X,Y,Z}, most significant qubit first.
    pub fn parse(text: &str, num_qubits: usize) -> Result<Self, EngineError> {
        if text.chars().count() != num_qubits {
            return Err(EngineError::BadPauliString(text.to_string()));
        }
        let (mut x, mut z) = (0usize, 0usize);
        for (pos, ch) in text.chars().enumerate() {
            let bit = 1usize << (num_qubits - 1 - pos);
            match ch.to_ascii_uppercase() {
                'I' => {}
                'X' => x |= bit,
                'Z' => z |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit;
                }
                _ => return Err(EngineError::BadPauliString(text.to_string())),
            }
        }
        Ok(Self { num_qubits, x, z })
    }

    pub fn label(&self) -> String {
        (0..self.num_qubits)
            .rev()
            .map(|q| match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (0, 1) => 'Z',
                _ => 'Y',
            })
            .collect()
    }

    /// All 4^n strings; index digits in base 4 encode I,X,Y,Z per qubit.
    pub fn all(num_qubits: usize) -> Vec<Self> {
        (0..1usize << (2 * num_qubits))
            .map(|code| {
                let (mut x, mut z) = (0, 0);
                for q in 0..num_qubits {
                    match (code >> (2 * q)) & 3 {
                        1 => x |= 1 << q,
                        2 => {
                            x |= 1 << q;
                            z |= 1 << q;
                        }
                        3 => z |= 1 << q,
                        _ => {}
                    }
                }
                Self { num_qubits, x, z }
            })
            .collect()
    }

    /// Matrix element ⟨j ⊕ x| P |j⟩ = i^{#Y} (−1)^{popcount(j & z)}.
    pub fn column_phase(&self, j: usize) -> C64 {
        let ys = (self.x & self.z).count_ones();
        let sign = if (j & self.z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        let iy = match ys % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        iy * sign
    }

    /// Tr(ρP) = Σ_j ⟨j|ρ|j⊕x⟩ · phase(j)
    pub fn expectation(&self, rho: &DensityMatrix) -> C64 {
        let dim = rho.dim();
        (0..dim).map(|j| rho.data[j * dim + (j ^ self.x)] * self.column_phase(j)).sum()
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::StandardGate;
    use crate::linalg::re;

    fn bell() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::from_pure(&[re(s), ZERO, ZERO, re(s)]).unwrap()
    }

    #[test]
    fn partial_trace_examples() {
        let marginal = bell().partial_trace(&[0]).unwrap();
        assert!(marginal.max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-15);

        let rho = bell();
        assert_eq!(rho.partial_trace(&[0, 1]).unwrap(), rho);

        // q0 = 1, q1 = 0; tracing out q0 leaves |0⟩ on q1
        let product = DensityMatrix::basis_state(2, 0b01);
        let q1 = product.partial_trace(&[1]).unwrap();
        assert!(q1.max_abs_diff(&DensityMatrix::zero_state(1)) < 1e-15);

        assert!(matches!(rho.partial_trace(&[]), Err(EngineError::EmptyKeepSet)));
    }

    #[test]
    fn reduce_to_reorders_qubits() {
        let rho = DensityMatrix::basis_state(3, 0b001);
        let swapped = rho.reduce_to(&[2, 0]).unwrap();
        assert_eq!(swapped.probabilities(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn expectation_examples() {
        assert!((DensityMatrix::zero_state(1).expectation("Z").unwrap() - 1.0).abs() < 1e-15);
        assert!((bell().expectation("XX").unwrap() - 1.0).abs() < 1e-12);
        assert!((bell().expectation("YY").unwrap() + 1.0).abs() < 1e-12);
        let mixed_high = DensityMatrix::zero_state(1).tensor(&DensityMatrix::maximally_mixed(1));
        assert!(mixed_high.expectation("ZI").unwrap().abs() < 1e-15);
        assert!((mixed_high.expectation("IZ").unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(bell().expectation("XQ"), Err(EngineError::BadPauliString(_))));
        assert!(matches!(bell().expectation("X"), Err(EngineError::BadPauliString(_))));
    }

    #[test]
    fn kraus_examples() {
        let mut rho = DensityMatrix::basis_state(1, 1);
        rho.apply_kraus(0, &[linalg::identity::<2>()]).unwrap();
        assert_eq!(rho, DensityMatrix::basis_state(1, 1));

        let damp = |eta: f64| -> [Mat2; 2] {
            [[[ONE, ZERO], [ZERO, re((1.0 - eta).sqrt())]], [[ZERO, re(eta.sqrt())], [ZERO, ZERO]]]
        };
        rho.apply_kraus(0, &damp(1.0)).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::zero_state(1)) < 1e-15);

        let mut rho = DensityMatrix::basis_state(1, 1);
        rho.apply_kraus(0, &damp(0.1f64.sin().powi(2))).unwrap();
        // P(1) = 1 − sin²(0.1) = cos²(0.1)
        assert!((rho.probabilities()[1] - 0.1f64.cos().powi(2)).abs() < 1e-15);
        assert!((rho.probabilities()[1] - 0.990033).abs() < 1e-6);

        let bad = [[[ONE, ZERO], [ZERO, re(0.5)]]];
        assert!(matches!(rho.apply_kraus(0, &bad), Err(EngineError::NonTracePreservingSet { .. })));
    }

    #[test]
    fn unitary_application_matches_dense_product() {
        let mut rho = DensityMatrix::zero_state(3);
        rho.apply_gate(&StandardGate::H.on(&[2]).unwrap());
        rho.apply_gate(&StandardGate::Cx.on(&[2, 0]).unwrap());
        // (|000⟩ + |101⟩)/√2
        let p = rho.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[5] - 0.5).abs() < 1e-15);
        assert!((rho.get(0, 5).re - 0.5).abs() < 1e-15);
        rho.validate().unwrap();
    }

    #[test]
    fn reset_and_dephase() {
        let mut rho = bell();
        rho.reset(1);
        // q1 → |0⟩, q0 left maximally mixed
        assert!((rho.probabilities()[0] - 0.5).abs() < 1e-15);
        assert!((rho.probabilities()[1] - 0.5).abs() < 1e-15);
        assert!(rho.get(0, 1).norm() < 1e-15);

        let mut rho = bell();
        rho.dephase(0);
        assert!(rho.get(0, 3).norm() < 1e-15);
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pauli_labels_round_trip() {
        for p in PauliString::all(2) {
            assert_eq!(PauliString::parse(&p.label(), 2).unwrap(), p);
        }
        assert_eq!(PauliString::all(3).len(), 64);
    }

    #[test]
    fn validate_rejects_bad_states() {
        let not_trace_one = DensityMatrix::from_operator(vec![re(0.5), ZERO, ZERO, re(0.6)]).unwrap();
        assert!(not_trace_one.validate().is_err());
        let negative = DensityMatrix::from_operator(vec![re(1.2), ZERO, ZERO, re(-0.2)]).unwrap();
        assert!(negative.validate().is_err());
        let non_herm = DensityMatrix::from_operator(vec![re(0.5), re(0.1), ZERO, re(0.5)]).unwrap();
        assert!(non_herm.validate().is_err());
    }
}
