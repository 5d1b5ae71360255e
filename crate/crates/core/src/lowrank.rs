//! Leading eigenpairs of a Hermitian positive semi-definite matrix.
//!
//! Block subspace iteration with Rayleigh-Ritz extraction. The block grows
//! until it holds the smallest set of eigenpairs whose eigenvalues sum to at
//! least `(1 - delta)` of a known trace, plus a guard band for convergence.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

const INITIAL_BLOCK: usize = 64;
const MAX_ITERATIONS: usize = 300;
const RESIDUAL_TOLERANCE: f64 = 1e-11;

/// Leading eigenpairs, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct TruncatedEigen {
    pub values: Vec<f64>,
    /// `n x k`, column `i` pairs with `values[i]`.
    pub vectors: DMatrix<Complex64>,
}

/// Smallest `k` such that the `k` leading eigenvalues of `gram` sum to at
/// least `(1 - delta) * trace`, with their eigenvectors.
///
/// Each eigenvector's largest-magnitude entry is rotated onto the positive
/// real axis so the output does not depend on the solver's phase choices.
pub fn truncated_hermitian_eigen(
    gram: &DMatrix<Complex64>,
    trace: f64,
    delta: f64,
) -> Result<TruncatedEigen> {
    let n = gram.nrows();
    if n == 0 || gram.ncols() != n {
        return Err(Error::InvalidParameter(
            "gram matrix must be square and non-empty",
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter("delta must lie in (0, 1)"));
    }
    let target = (1.0 - delta) * trace;
    let mut rng = SplitMix64(0x05ee_d0f5_d9a7);
    let mut block = INITIAL_BLOCK.min(n);
    let mut basis = orthonormalize(gram * random_block(n, block, &mut rng));

    'grow: loop {
        for _ in 0..MAX_ITERATIONS {
            let image = gram * &basis;
            let mut projected = basis.adjoint() * &image;
            hermitize(&mut projected);
            let (values, rotation) = sorted_eigen(projected);
            let ritz = &basis * &rotation;
            let ritz_image = &image * &rotation;

            let rank = leading_rank(&values, target);
            let guard = (rank / 2).max(16);
            if block < n && rank + guard > block {
                let grown = (2 * block).max(rank + guard).min(n);
                let fresh = gram * random_block(n, grown - block, &mut rng);
                let mut start = DMatrix::zeros(n, grown);
                start.columns_mut(0, block).copy_from(&ritz);
                start.columns_mut(block, grown - block).copy_from(&fresh);
                basis = orthonormalize(start);
                block = grown;
                continue 'grow;
            }

            let scale = values[0].abs().max(f64::MIN_POSITIVE);
            let converged = block == n
                || (0..rank).all(|i| {
                    let residual =
                        ritz_image.column(i) - ritz.column(i) * Complex64::new(values[i], 0.0);
                    residual.norm() <= RESIDUAL_TOLERANCE * scale
                });
            if converged {
                let mut vectors = ritz.columns(0, rank).into_owned();
                for mut col in vectors.column_iter_mut() {
                    let pivot = col
                        .iter()
                        .enumerate()
                        .fold((0, -1.0), |(bi, bm), (i, z)| {
                            if z.norm() > bm {
                                (i, z.norm())
                            } else {
                                (bi, bm)
                            }
                        })
                        .0;
                    let phase = col[pivot] / col[pivot].norm();
                    col.iter_mut().for_each(|z| *z /= phase);
                }
                return Ok(TruncatedEigen {
                    values: values[..rank].to_vec(),
                    vectors,
                });
            }
            basis = orthonormalize(ritz_image);
        }
        return Err(Error::NoConvergence);
    }
}

/// Number of leading values needed to reach `target`; all of them if never reached.
fn leading_rank(values: &[f64], target: f64) -> usize {
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if sum >= target {
            return i + 1;
        }
    }
    values.len()
}

fn hermitize(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

fn sorted_eigen(m: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

fn orthonormalize(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.qr().q()
}

fn random_block(n: usize, cols: usize, rng: &mut SplitMix64) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, cols, |_, _| {
        Complex64::new(rng.next_f64(), rng.next_f64())
    })
}

#[derive(Debug)]
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_gram(n: usize, rank: usize, decay: f64) -> DMatrix<Complex64> {
        let mut rng = SplitMix64(42);
        let a = DMatrix::from_fn(n, rank, |_, c| {
            Complex64::new(rng.next_f64(), rng.next_f64()) * decay.powi(c as i32)
        });
        &a * a.adjoint()
    }

    #[test]
    fn matches_dense_solver() {
        for (n, rank) in [(40, 40), (200, 150), (300, 120)] {
            let gram = random_gram(n, rank, 0.9);
            let trace: f64 = (0..n).map(|i| gram[(i, i)].re).sum();
            for delta in [0.3, 1e-3, 1e-6] {
                let got = truncated_hermitian_eigen(&gram, trace, delta).unwrap();
                let (reference, _) = sorted_eigen(gram.clone());
                let k = leading_rank(&reference, (1.0 - delta) * trace);
                assert_eq!(got.values.len(), k, "n={n} delta={delta}");
                for (a, b) in got.values.iter().zip(&reference) {
                    assert!((a - b).abs() <= 1e-9 * reference[0]);
                }
                let orth = got.vectors.adjoint() * &got.vectors;
                assert!((orth - DMatrix::identity(k, k)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn delta_near_one_keeps_one_component() {
        let gram = random_gram(50, 10, 0.5);
        let trace: f64 = (0..50).map(|i| gram[(i, i)].re).sum();
        let got = truncated_hermitian_eigen(&gram, trace, 0.999_999).unwrap();
        assert_eq!(got.values.len(), 1);
    }

    #[test]
    fn rejects_bad_delta() {
        let gram = random_gram(5, 2, 1.0);
        assert!(truncated_hermitian_eigen(&gram, 1.0, 0.0).is_err());
        assert!(truncated_hermitian_eigen(&gram, 1.0, 1.0).is_err());
    }
}
