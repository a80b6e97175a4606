// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Small fixed-size complex matrices and a Hermitian eigensolver bridge.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;

/// 2×2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];
/// 4×4 complex matrix, row-major.
pub type Mat4 = [[C64; 4]; 4];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity<const N: usize>() -> [[C64; N]; N] {
    let mut m = [[ZERO; N]; N];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = ONE;
    }
    m
}

pub fn dagger<const N: usize>(m: &[[C64; N]; N]) -> [[C64; N]; N] {
    let mut out = [[ZERO; N]; N];
    for r in 0..N {
        for c in 0..N {
            out[c][r] = m[r][c].conj();
        }
    }
    out
}

pub fn matmul<const N: usize>(a: &[[C64; N]; N], b: &[[C64; N]; N]) -> [[C64; N]; N] {
    let mut out = [[ZERO; N]; N];
    for r in 0..N {
        for c in 0..N {
            out[r][c] = (0..N).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

/// Largest absolute entrywise difference.
pub fn max_abs_diff<const N: usize>(a: &[[C64; N]; N], b: &[[C64; N]; N]) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..N {
        for c in 0..N {
            worst = worst.max((a[r][c] - b[r][c]).norm());
        }
    }
    worst
}

/// ‖U†U − I‖_max
pub fn unitarity_defect<const N: usize>(u: &[[C64; N]; N]) -> f64 {
    max_abs_diff(&matmul(&dagger(u), u), &identity::<N>())
}

/// `a ⊗ b` with `a` acting on the more significant local index.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = a[r >> 1][c >> 1] * b[r & 1][c & 1];
        }
    }
    out
}

/// block-diag(I, U): applies `u` to the second qubit when the first is |1⟩.
pub fn controlled(u: &Mat2) -> Mat4 {
    let mut out = identity::<4>();
    for r in 0..2 {
        for c in 0..2 {
            out[2 + r][2 + c] = u[r][c];
        }
    }
    out
}

/// If `m` is block-diag(I, U), returns U.
pub fn as_controlled(m: &Mat4, tol: f64) -> Option<Mat2> {
    let id = identity::<2>();
    for r in 0..4 {
        for c in 0..4 {
            let in_lower = r >= 2 && c >= 2;
            if in_lower {
                continue;
            }
            let expected = if r < 2 && c < 2 { id[r][c] } else { ZERO };
            if (m[r][c] - expected).norm() > tol {
                return None;
            }
        }
    }
    Some([[m[2][2], m[2][3]], [m[3][2], m[3][3]]])
}

/// Eigen-decomposition of a dense Hermitian matrix stored row-major.
///
/// Returns ascending eigenvalues and the matching eigenvectors as columns of
/// a row-major `dim×dim` buffer.
pub fn hermitian_eigen(data: &[C64], dim: usize) -> (Vec<f64>, Vec<C64>) {
    let m = DMatrix::from_fn(dim, dim, |r, c| {
        // symmetrise against round-off so the solver sees an exact Hermitian input
        (data[r * dim + c] + data[c * dim + r].conj()) * 0.5
    });
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = vec![ZERO; dim * dim];
    for (col, &k) in order.iter().enumerate() {
        for r in 0..dim {
            vectors[r * dim + col] = eig.eigenvectors[(r, k)];
        }
    }
    (values, vectors)
}

/// Singular values of a dense row-major `dim×dim` matrix, descending.
pub fn singular_values(data: &[C64], dim: usize) -> Vec<f64> {
    let m = DMatrix::from_fn(dim, dim, |r, c| data[r * dim + c]);
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Rebuilds `V diag(f(λ)) V†` from a Hermitian eigen-decomposition.
pub fn hermitian_function(values: &[f64], vectors: &[C64], dim: usize, f: impl Fn(f64) -> f64) -> Vec<C64> {
    let mapped: Vec<f64> = values.iter().map(|&v| f(v)).collect();
    let mut out = vec![ZERO; dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let mut acc = ZERO;
            for k in 0..dim {
                if mapped[k] != 0.0 {
                    acc += vectors[r * dim + k] * vectors[c * dim + k].conj() * mapped[k];
                }
            }
            out[r * dim + c] = acc;
        }
    }
    out
}

/// Dense row-major product of two `dim×dim` matrices.
pub fn dense_matmul(a: &[C64], b: &[C64], dim: usize) -> Vec<C64> {
    let mut out = vec![ZERO; dim * dim];
    for r in 0..dim {
        for k in 0..dim {
            let x = a[r * dim + k];
            if x == ZERO {
                continue;
            }
            let brow = &b[k * dim..(k + 1) * dim];
            let orow = &mut out[r * dim..(r + 1) * dim];
            for (o, y) in orow.iter_mut().zip(brow) {
                *o += x * y;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn controlled_round_trips() {
        let u = [[ZERO, ONE], [ONE, ZERO]];
        let cu = controlled(&u);
        assert_eq!(as_controlled(&cu, 1e-12), Some(u));
        assert!(as_controlled(&kron2(&u, &u), 1e-12).is_none());
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let dim = 3;
        let data = vec![
            re(2.0), C64::new(0.5, 0.25), ZERO,
            C64::new(0.5, -0.25), re(1.0), C64::new(0.0, 0.3),
            ZERO, C64::new(0.0, -0.3), re(-1.0),
        ];
        let (vals, vecs) = hermitian_eigen(&data, dim);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let back = hermitian_function(&vals, &vecs, dim, |x| x);
        for (a, b) in back.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
