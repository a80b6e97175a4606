// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Pauli state tomography and Uhlmann fidelity.
//!
//! Reconstruction is linear inversion, ρ̂ = 2⁻ᵏ Σ_P ⟨P⟩ P over all 4ᵏ Pauli
//! strings, followed by projection onto the trace-one positive cone by
//! eigenvalue clipping. ⟨P⟩ is averaged over every measurement setting that
//! agrees with P on its non-identity letters.

use std::collections::BTreeMap;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::StandardGate;
use crate::engine::{DensityMatrix, EngineError, PauliString};
use crate::exec::Exec;
use crate::linalg::{self, C64, ZERO};

pub const MAX_TOMOGRAPHY_QUBITS: usize = 5;

const EIGEN_FLOOR: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum TomographyError {
    #[error("tomography supports 1..={MAX_TOMOGRAPHY_QUBITS} qubits, got {0}")]
    TooManyQubits(usize),
    #[error("incomplete data: {0}")]
    IncompleteData(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// One measurement basis per qubit, most significant qubit first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TomographySetting {
    pub basis: String,
}

/// All 3ᵏ settings over {X, Y, Z} in lexicographic order.
pub fn tomography_settings(k: usize) -> Result<Vec<TomographySetting>, TomographyError> {
    if k == 0 || k > MAX_TOMOGRAPHY_QUBITS {
        return Err(TomographyError::TooManyQubits(k));
    }
    let letters = ['X', 'Y', 'Z'];
    let total = 3usize.pow(k as u32);
    Ok((0..total)
        .map(|mut code| {
            let mut basis = vec![' '; k];
            for slot in basis.iter_mut().rev() {
                *slot = letters[code % 3];
                code /= 3;
            }
            TomographySetting { basis: basis.into_iter().collect() }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TomographyMode {
    ExactExpectations,
    Shots { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingData {
    pub basis: String,
    /// Outcome bitstring (most significant qubit first) → count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<BTreeMap<String, u64>>,
    /// Pauli label → exact expectation, for every string this setting measures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expectations: Option<BTreeMap<String, f64>>,
}

/// Measurement record for one tomography run (the JSON dump format).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyData {
    pub k: usize,
    pub mode: TomographyMode,
    pub settings: Vec<SettingData>,
}

impl TomographyData {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tomography data serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    pub rho_hat: DensityMatrix,
    pub mode: TomographyMode,
    pub settings_used: usize,
}

/// Pauli strings measured by a setting: each letter kept or replaced by I.
fn measured_paulis(basis: &str) -> Vec<String> {
    let letters: Vec<char> = basis.chars().collect();
    let k = letters.len();
    (0..1usize << k)
        .map(|mask| letters.iter().enumerate().map(|(p, &ch)| if mask >> p & 1 == 1 { ch } else { 'I' }).collect())
        .collect()
}

fn compatible(pauli: &str, basis: &str) -> bool {
    pauli.chars().zip(basis.chars()).all(|(p, b)| p == 'I' || p == b)
}

/// Exact expectations of every setting for a `k`-qubit state.
pub fn exact_data(rho: &DensityMatrix, exec: Exec) -> Result<TomographyData, TomographyError> {
    let k = rho.num_qubits();
    let settings = tomography_settings(k)?;
    let per_setting = exec.map(&settings, |s| -> Result<SettingData, TomographyError> {
        let mut expectations = BTreeMap::new();
        for label in measured_paulis(&s.basis) {
            let value = rho.expectation(&label)?;
            expectations.insert(label, value);
        }
        Ok(SettingData { basis: s.basis.clone(), counts: None, expectations: Some(expectations) })
    });
    Ok(TomographyData {
        k,
        mode: TomographyMode::ExactExpectations,
        settings: per_setting.into_iter().collect::<Result<_, _>>()?,
    })
}

/// Rotates each qubit so that a Z measurement reads the setting's basis.
fn rotate_into_basis(rho: &DensityMatrix, basis: &str) -> DensityMatrix {
    let k = rho.num_qubits();
    let mut out = rho.clone();
    let h = StandardGate::H.matrix1().expect("1q");
    let sdg = StandardGate::Sdg.matrix1().expect("1q");
    for (pos, ch) in basis.chars().enumerate() {
        let q = k - 1 - pos;
        match ch {
            'X' => out.apply_unitary(&[q], &h),
            'Y' => out.apply_unitary(&[q], &linalg::matmul(&h, &sdg)),
            _ => {}
        }
    }
    out
}

/// Samples `shots` terminal measurements per setting from the exact state.
///
/// Setting `i` draws from ChaCha8 seeded with `seed` on stream `i`.
pub fn sample_data(rho: &DensityMatrix, shots: u64, seed: u64, exec: Exec) -> Result<TomographyData, TomographyError> {
    let k = rho.num_qubits();
    let settings = tomography_settings(k)?;
    let indexed: Vec<(usize, &TomographySetting)> = settings.iter().enumerate().collect();
    let per_setting = exec.map(&indexed, |&(i, s)| {
        let probs: Vec<f64> = rotate_into_basis(rho, &s.basis).probabilities().into_iter().map(|p| p.max(0.0)).collect();
        let dist = WeightedIndex::new(&probs).expect("probabilities sum to one");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut tally = vec![0u64; probs.len()];
        for _ in 0..shots {
            tally[dist.sample(&mut rng)] += 1;
        }
        let counts = tally
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(idx, &n)| (format!("{idx:0k$b}"), n))
            .collect();
        SettingData { basis: s.basis.clone(), counts: Some(counts), expectations: None }
    });
    Ok(TomographyData { k, mode: TomographyMode::Shots { shots, seed }, settings: per_setting })
}

fn estimate_from_counts(pauli: &str, counts: &BTreeMap<String, u64>) -> f64 {
    let support: Vec<usize> = pauli.chars().enumerate().filter(|(_, c)| *c != 'I').map(|(p, _)| p).collect();
    let total: u64 = counts.values().sum();
    let signed: i64 = counts
        .iter()
        .map(|(bits, &n)| {
            let bytes = bits.as_bytes();
            let parity = support.iter().filter(|&&p| bytes[p] == b'1').count() % 2;
            if parity == 0 { n as i64 } else { -(n as i64) }
        })
        .sum();
    signed as f64 / total as f64
}

/// Linear inversion plus PSD projection.
pub fn reconstruct(data: &TomographyData) -> Result<TomographyResult, TomographyError> {
    let k = data.k;
    if k == 0 || k > MAX_TOMOGRAPHY_QUBITS {
        return Err(TomographyError::TooManyQubits(k));
    }
    for s in &data.settings {
        if s.basis.chars().count() != k {
            return Err(TomographyError::IncompleteData(format!("setting `{}` does not have {k} letters", s.basis)));
        }
    }
    let dim = 1usize << k;
    let mut matrix = vec![ZERO; dim * dim];
    for p in PauliString::all(k) {
        let label = p.label();
        let mut sum = 0.0;
        let mut n = 0usize;
        for s in data.settings.iter().filter(|s| compatible(&label, &s.basis)) {
            if let Some(exp) = &s.expectations {
                if let Some(v) = exp.get(&label) {
                    sum += v;
                    n += 1;
                    continue;
                }
            }
            if let Some(counts) = &s.counts {
                if counts.values().sum::<u64>() > 0 {
                    sum += estimate_from_counts(&label, counts);
                    n += 1;
                }
            }
        }
        if n == 0 {
            return Err(TomographyError::IncompleteData(format!("no setting measures {label}")));
        }
        let value = sum / n as f64 / dim as f64;
        for j in 0..dim {
            matrix[(j ^ p.x) * dim + j] += p.column_phase(j) * value;
        }
    }
    let rho_hat = project_psd(&DensityMatrix::from_operator(matrix)?);
    Ok(TomographyResult { rho_hat, mode: data.mode, settings_used: data.settings.len() })
}

/// Nearest trace-one PSD matrix by clipping negative eigenvalues and renormalising.
pub fn project_psd(rho: &DensityMatrix) -> DensityMatrix {
    let dim = rho.dim();
    let (values, vectors) = linalg::hermitian_eigen(rho.data(), dim);
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let data = if total > 0.0 {
        linalg::hermitian_function(&values, &vectors, dim, |v| v.max(0.0) / total)
    } else {
        DensityMatrix::maximally_mixed(rho.num_qubits()).into_data()
    };
    DensityMatrix::from_operator(data).expect("same dimension")
}

/// √ρ with eigenvalues at or below `EIGEN_FLOOR` treated as exact zeros.
fn sqrt_psd(data: &[C64], dim: usize) -> Vec<C64> {
    let (values, vectors) = linalg::hermitian_eigen(data, dim);
    let floor = EIGEN_FLOOR * values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    linalg::hermitian_function(&values, &vectors, dim, |v| if v > floor { v.sqrt() } else { 0.0 })
}

/// Uhlmann fidelity (Tr√(√ρ σ √ρ))², evaluated as the squared trace norm of √ρ√σ.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, TomographyError> {
    if rho.dim() != sigma.dim() {
        return Err(TomographyError::DimensionMismatch(rho.num_qubits(), sigma.num_qubits()));
    }
    let dim = rho.dim();
    let product = linalg::dense_matmul(&sqrt_psd(rho.data(), dim), &sqrt_psd(sigma.data(), dim), dim);
    let tr: f64 = linalg::singular_values(&product, dim).iter().sum();
    Ok(tr * tr)
}

/// Tomography of the listed qubits of a full register state (`qubits[i]` → bit `i`).
pub fn state_tomography(state: &DensityMatrix, qubits: &[usize], mode: TomographyMode, exec: Exec) -> Result<TomographyResult, TomographyError> {
    let reduced = state.reduce_to(qubits)?;
    let data = match mode {
        TomographyMode::ExactExpectations => exact_data(&reduced, exec)?,
        TomographyMode::Shots { shots, seed } => sample_data(&reduced, shots, seed, exec)?,
    };
    reconstruct(&data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::re;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn settings_enumeration() {
        let one: Vec<String> = tomography_settings(1).unwrap().into_iter().map(|s| s.basis).collect();
        assert_eq!(one, ["X", "Y", "Z"]);
        let two = tomography_settings(2).unwrap();
        assert_eq!(two.len(), 9);
        assert_eq!(two[0].basis, "XX");
        assert_eq!(two[8].basis, "ZZ");
        assert_eq!(tomography_settings(5).unwrap().len(), 243);
        assert!(matches!(tomography_settings(6), Err(TomographyError::TooManyQubits(6))));
        assert!(matches!(tomography_settings(0), Err(TomographyError::TooManyQubits(0))));
    }

    #[test]
    fn exact_reconstruction_of_simple_states() {
        let zero = DensityMatrix::zero_state(1);
        let r = reconstruct(&exact_data(&zero, Exec::Sequential).unwrap()).unwrap();
        assert!(r.rho_hat.max_abs_diff(&zero) < 1e-10);
        assert_eq!(r.settings_used, 3);

        let bell = DensityMatrix::from_pure(&[re(FRAC_1_SQRT_2), ZERO, ZERO, re(FRAC_1_SQRT_2)]).unwrap();
        let r = reconstruct(&exact_data(&bell, Exec::Parallel).unwrap()).unwrap();
        assert!((fidelity(&bell, &r.rho_hat).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shot_reconstruction_of_plus_state() {
        let plus = DensityMatrix::from_pure(&[re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)]).unwrap();
        let data = sample_data(&plus, 4096, 17, Exec::Parallel).unwrap();
        let r = reconstruct(&data).unwrap();
        assert!(fidelity(&plus, &r.rho_hat).unwrap() >= 0.99);
        r.rho_hat.validate().unwrap();
    }

    #[test]
    fn fidelity_examples() {
        let zero = DensityMatrix::zero_state(1);
        let plus = DensityMatrix::from_pure(&[re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)]).unwrap();
        assert!((fidelity(&zero, &plus).unwrap() - 0.5).abs() < 1e-12);
        assert!((fidelity(&DensityMatrix::maximally_mixed(1), &zero).unwrap() - 0.5).abs() < 1e-12);
        assert!((fidelity(&plus, &plus).unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(fidelity(&zero, &DensityMatrix::zero_state(2)), Err(TomographyError::DimensionMismatch(1, 2))));
    }

    #[test]
    fn missing_settings_are_reported() {
        let zero = DensityMatrix::zero_state(2);
        let mut data = exact_data(&zero, Exec::Sequential).unwrap();
        data.settings.retain(|s| !s.basis.starts_with('Y'));
        assert!(matches!(reconstruct(&data), Err(TomographyError::IncompleteData(_))));
    }

    #[test]
    fn data_dump_round_trips() {
        let plus = DensityMatrix::from_pure(&[re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)]).unwrap();
        let data = sample_data(&plus, 100, 1, Exec::Sequential).unwrap();
        assert_eq!(TomographyData::from_json(&data.to_json()).unwrap(), data);
    }

    #[test]
    fn projection_clips_and_renormalises() {
        let bad = DensityMatrix::from_operator(vec![re(1.1), ZERO, ZERO, re(-0.1)]).unwrap();
        let fixed = project_psd(&bad);
        assert!(fixed.max_abs_diff(&DensityMatrix::zero_state(1)) < 1e-12);
        assert!(project_psd(&fixed).max_abs_diff(&fixed) < 1e-12);
    }
}
