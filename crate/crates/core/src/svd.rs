//! SVD-PHAT: low-rank steered response power with multi-source deflation.
//!
//! Offline, the steering matrix `W` (one row per grid direction, one column
//! per pair and frequency bin) is factored as `W ≈ U S V^H`, keeping the
//! smallest rank whose singular values hold a `1 - δ` share of its energy.
//! The dictionary is `D = U S`.
//!
//! Online, an observation `X` is projected to `Z = V^H X`, so that
//! `Re{D Z} ≈ Re{W X}` is the continuous-TDOA steered power. The best
//! direction is the dictionary row nearest (after normalization) to `Z`,
//! found with a k-d tree. Each found direction is removed from `Z` by
//! Gram-Schmidt deflation before the next scan.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)] // float math comes from here only without std
use num_traits::Float;

use crate::geometry::{DoaGrid, TdoaTable};
use crate::kdtree::NnIndex;
use crate::lowrank::truncated_hermitian_eigen;
use crate::scan::{Estimate, ScanResult};
use crate::spectral::PhatVector;
use crate::{Error, Result, Vec3};

/// A found direction whose Gram-Schmidt remainder is below this fraction of
/// its own norm is treated as already spanned.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;

/// Continuous-TDOA steering supermatrix, `W[q, (p, k)] = exp(2πi k τ_pq / N)`.
///
/// Entries are generated on demand from the TDOA table.
#[derive(Debug, Clone)]
pub struct SteeringMatrix<'a> {
    tdoa: &'a TdoaTable,
    frame_size: usize,
}

impl<'a> SteeringMatrix<'a> {
    pub fn new(tdoa: &'a TdoaTable, frame_size: usize) -> Result<Self> {
        if frame_size == 0 || !frame_size.is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "frame size must be even and positive",
            ));
        }
        Ok(Self { tdoa, frame_size })
    }

    pub fn num_bins(&self) -> usize {
        self.frame_size / 2 + 1
    }

    pub fn rows(&self) -> usize {
        self.tdoa.num_directions()
    }

    /// `P (N/2 + 1)`
    pub fn cols(&self) -> usize {
        self.tdoa.num_pairs() * self.num_bins()
    }

    pub fn entry(&self, q: usize, col: usize) -> Complex64 {
        let (p, k) = (col / self.num_bins(), col % self.num_bins());
        let phase = 2.0 * PI * k as f64 * self.tdoa.tau(p, q) / self.frame_size as f64;
        Complex64::from_polar(1.0, phase)
    }

    pub fn row(&self, q: usize) -> Vec<Complex64> {
        (0..self.cols()).map(|c| self.entry(q, c)).collect()
    }

    /// `Tr{W W^H}`; every entry has unit modulus.
    pub fn energy(&self) -> f64 {
        (self.rows() * self.cols()) as f64
    }

    /// `W W^H`, summing each pair's bins in closed form:
    /// `Σ_{k=0}^{H} e^{iθk} = e^{iθH/2} sin((H+1)θ/2) / sin(θ/2)`.
    pub fn gram(&self) -> DMatrix<Complex64> {
        let q_len = self.rows();
        let half = (self.num_bins() - 1) as f64;
        let n = self.frame_size as f64;
        let mut gram = DMatrix::zeros(q_len, q_len);
        for p in 0..self.tdoa.num_pairs() {
            let row = self.tdoa.pair_row(p);
            for a in 0..q_len {
                gram[(a, a)] += Complex64::new(half + 1.0, 0.0);
                for b in a + 1..q_len {
                    let theta = 2.0 * PI * (row[a] - row[b]) / n;
                    let sum = dirichlet_sum(theta, half);
                    gram[(a, b)] += sum;
                    gram[(b, a)] += sum.conj();
                }
            }
        }
        gram
    }
}

fn dirichlet_sum(theta: f64, half: f64) -> Complex64 {
    let denom = (theta / 2.0).sin();
    if denom.abs() < 1e-6 {
        return (0..=half as usize)
            .map(|k| Complex64::from_polar(1.0, theta * k as f64))
            .sum();
    }
    Complex64::from_polar(
        ((half + 1.0) * theta / 2.0).sin() / denom,
        theta * half / 2.0,
    )
}

/// Offline SVD-PHAT factors and the search index over the dictionary.
#[derive(Debug, Clone)]
pub struct SvdPhatModel {
    directions: Vec<Vec3>,
    grid_level: u32,
    num_pairs: usize,
    frame_size: usize,
    delta: f64,
    rank: usize,
    /// `V`, `P(N/2+1) x K`, row-major.
    basis: Vec<Complex64>,
    /// `D = U S`, `Q x K`, row-major.
    dictionary: Vec<Complex64>,
    singular_values: Vec<f64>,
    total_energy: f64,
    index: NnIndex,
}

impl SvdPhatModel {
    pub fn build(grid: &DoaGrid, tdoa: &TdoaTable, frame_size: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter("delta must lie in (0, 1)"));
        }
        if tdoa.num_directions() != grid.len() {
            return Err(Error::DimensionMismatch {
                what: "grid size",
                expected: grid.len(),
                got: tdoa.num_directions(),
            });
        }
        let all_zero = (0..tdoa.num_pairs()).all(|p| tdoa.pair_row(p).iter().all(|&t| t == 0.0));
        if all_zero {
            return Err(Error::DegenerateGeometry);
        }

        let steering = SteeringMatrix::new(tdoa, frame_size)?;
        let total_energy = steering.energy();
        let eig = truncated_hermitian_eigen(&steering.gram(), total_energy, delta)?;
        let rank = eig.values.len();
        let singular_values: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
        if singular_values.iter().any(|&s| s <= 0.0) {
            return Err(Error::DegenerateGeometry);
        }

        let q_len = grid.len();
        let mut dictionary = vec![Complex64::new(0.0, 0.0); q_len * rank];
        for q in 0..q_len {
            for c in 0..rank {
                dictionary[q * rank + c] = eig.vectors[(q, c)] * singular_values[c];
            }
        }

        // V = W^H U S^-1, accumulated one steering column at a time
        let cols = steering.cols();
        let bins = steering.num_bins();
        let mut basis = vec![Complex64::new(0.0, 0.0); cols * rank];
        let mut scaled_u = vec![Complex64::new(0.0, 0.0); q_len * rank];
        for q in 0..q_len {
            for c in 0..rank {
                scaled_u[q * rank + c] = eig.vectors[(q, c)] / singular_values[c];
            }
        }
        for p in 0..tdoa.num_pairs() {
            let row = tdoa.pair_row(p);
            for k in 0..bins {
                let out = &mut basis[(p * bins + k) * rank..(p * bins + k + 1) * rank];
                let step = -2.0 * PI * k as f64 / frame_size as f64;
                for (q, &tau) in row.iter().enumerate() {
                    let w = Complex64::from_polar(1.0, step * tau);
                    for (o, u) in out.iter_mut().zip(&scaled_u[q * rank..(q + 1) * rank]) {
                        *o += w * u;
                    }
                }
            }
        }

        Self::assemble(
            grid.directions().to_vec(),
            grid.level(),
            tdoa.num_pairs(),
            frame_size,
            delta,
            rank,
            basis,
            dictionary,
            Some((singular_values, total_energy)),
        )
    }

    /// Rebuilds a model from stored factors. Singular values are recovered
    /// as the column norms of `D`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        directions: Vec<Vec3>,
        grid_level: u32,
        num_pairs: usize,
        frame_size: usize,
        delta: f64,
        rank: usize,
        basis: Vec<Complex64>,
        dictionary: Vec<Complex64>,
    ) -> Result<Self> {
        Self::assemble(
            directions, grid_level, num_pairs, frame_size, delta, rank, basis, dictionary, None,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        directions: Vec<Vec3>,
        grid_level: u32,
        num_pairs: usize,
        frame_size: usize,
        delta: f64,
        rank: usize,
        basis: Vec<Complex64>,
        dictionary: Vec<Complex64>,
        spectrum: Option<(Vec<f64>, f64)>,
    ) -> Result<Self> {
        let q_len = directions.len();
        let cols = num_pairs * (frame_size / 2 + 1);
        if rank == 0 || rank > q_len.min(cols) {
            return Err(Error::InvalidParameter(
                "rank must lie in 1..=min(Q, P(N/2+1))",
            ));
        }
        if basis.len() != cols * rank {
            return Err(Error::DimensionMismatch {
                what: "projection basis length",
                expected: cols * rank,
                got: basis.len(),
            });
        }
        if dictionary.len() != q_len * rank {
            return Err(Error::DimensionMismatch {
                what: "dictionary length",
                expected: q_len * rank,
                got: dictionary.len(),
            });
        }

        let mut embedded = Vec::with_capacity(q_len * 2 * rank);
        for row in dictionary.chunks_exact(rank) {
            let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::DegenerateGeometry);
            }
            for z in row {
                embedded.push(z.re / norm);
                embedded.push(z.im / norm);
            }
        }
        let index = NnIndex::build(&embedded, 2 * rank)?;

        let (singular_values, total_energy) = spectrum.unwrap_or_else(|| {
            let sv = (0..rank)
                .map(|c| {
                    (0..q_len)
                        .map(|q| dictionary[q * rank + c].norm_sqr())
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            (sv, (q_len * cols) as f64)
        });

        Ok(Self {
            directions,
            grid_level,
            num_pairs,
            frame_size,
            delta,
            rank,
            basis,
            dictionary,
            singular_values,
            total_energy,
            index,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn grid_level(&self) -> u32 {
        self.grid_level
    }

    pub fn num_directions(&self) -> usize {
        self.directions.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.num_pairs
    }

    pub fn frame_size(&self) -> usize {
        self.frame_size
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// `Tr{W W^H} = Q P (N/2 + 1)`.
    pub fn total_energy(&self) -> f64 {
        self.total_energy
    }

    /// `Tr{S S^T}`, the energy kept by the truncation.
    pub fn captured_energy(&self) -> f64 {
        self.singular_values.iter().map(|s| s * s).sum()
    }

    /// `V` row-major, `P(N/2+1) x K`.
    pub fn basis(&self) -> &[Complex64] {
        &self.basis
    }

    /// `D` row-major, `Q x K`.
    pub fn dictionary(&self) -> &[Complex64] {
        &self.dictionary
    }

    pub fn dictionary_row(&self, q: usize) -> &[Complex64] {
        &self.dictionary[q * self.rank..(q + 1) * self.rank]
    }

    pub fn index(&self) -> &NnIndex {
        &self.index
    }

    /// `Z = V^H X`
    pub fn project(&self, phat: &PhatVector) -> Result<Vec<Complex64>> {
        self.project_slice(phat.as_slice())
    }

    pub fn project_slice(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let cols = self.basis.len() / self.rank;
        if x.len() != cols {
            return Err(Error::DimensionMismatch {
                what: "observation length",
                expected: cols,
                got: x.len(),
            });
        }
        let mut z = vec![Complex64::new(0.0, 0.0); self.rank];
        for (row, &xl) in self.basis.chunks_exact(self.rank).zip(x) {
            if xl.re == 0.0 && xl.im == 0.0 {
                continue;
            }
            for (acc, v) in z.iter_mut().zip(row) {
                *acc += v.conj() * xl;
            }
        }
        Ok(z)
    }

    /// Low-rank steered power `Re{D_q Z}` of direction `q`.
    pub fn energy(&self, q: usize, z: &[Complex64]) -> f64 {
        self.dictionary_row(q)
            .iter()
            .zip(z)
            .map(|(d, z)| (d * z).re)
            .sum()
    }

    /// Direction whose normalized dictionary row is nearest to the normalized
    /// conjugate of `z`, i.e. the maximizer of `Re{D̂_q Ẑ}`. Returns the grid
    /// index and the unnormalized energy `Re{D_q Z}`.
    pub fn nearest_doa(&self, z: &[Complex64]) -> Result<(usize, f64)> {
        if z.len() != self.rank {
            return Err(Error::DimensionMismatch {
                what: "projection length",
                expected: self.rank,
                got: z.len(),
            });
        }
        let norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::SilentFrame);
        }
        let mut query = Vec::with_capacity(2 * self.rank);
        for v in z {
            query.push(v.re / norm);
            query.push(-v.im / norm);
        }
        let (q, _) = self.index.nearest(&query)?;
        Ok((q, self.energy(q, z)))
    }

    /// Removes the component of `state.z` along `conj(D_q)` after making it
    /// orthogonal to the directions already removed. Returns `true` when the
    /// direction was already spanned, in which case nothing changes.
    pub fn deflate(&self, state: &mut DeflationState, q: usize) -> Result<bool> {
        if q >= self.directions.len() {
            return Err(Error::InvalidParameter("direction index out of range"));
        }
        if state.z.len() != self.rank {
            return Err(Error::DimensionMismatch {
                what: "projection length",
                expected: self.rank,
                got: state.z.len(),
            });
        }
        let v: Vec<Complex64> = self.dictionary_row(q).iter().map(|d| d.conj()).collect();
        Ok(state.deflate_along(&v))
    }

    /// Multi-scan search over one observation. Silent frames give an empty result.
    pub fn localize(&self, phat: &PhatVector, scans: usize) -> Result<ScanResult> {
        self.localize_projection(self.project(phat)?, scans)
    }

    pub fn localize_projection(&self, z: Vec<Complex64>, scans: usize) -> Result<ScanResult> {
        if scans == 0 {
            return Err(Error::InvalidParameter("scan count must be at least 1"));
        }
        let mut state = DeflationState::new(z);
        let mut result = ScanResult::default();
        for _ in 0..scans {
            let (q, energy) = match self.nearest_doa(state.z()) {
                Ok(found) => found,
                Err(Error::SilentFrame) => break,
                Err(e) => return Err(e),
            };
            let duplicate = self.deflate(&mut state, q)?;
            result.estimates.push(Estimate {
                q,
                doa: self.directions[q],
                energy,
                duplicate,
            });
        }
        Ok(result)
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Per-frame Gram-Schmidt state: the orthonormal directions removed so far
/// and the remaining observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflationState {
    basis: Vec<Vec<Complex64>>,
    z: Vec<Complex64>,
}

impl DeflationState {
    pub fn new(z: Vec<Complex64>) -> Self {
        Self {
            basis: Vec::new(),
            z,
        }
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    pub fn basis(&self) -> &[Vec<Complex64>] {
        &self.basis
    }

    /// `u = v - Σ ⟨û_n, v⟩ û_n`, `û = u / |u|`, `Z ← Z - ⟨û, Z⟩ û`.
    pub fn deflate_along(&mut self, v: &[Complex64]) -> bool {
        let mut u = v.to_vec();
        // second pass picks up what cancellation left in the first
        for _ in 0..2 {
            for b in &self.basis {
                let c = inner(b, &u);
                for (ui, bi) in u.iter_mut().zip(b) {
                    *ui -= c * bi;
                }
            }
        }
        let u_norm = norm(&u);
        if u_norm < DUPLICATE_TOLERANCE * norm(v) || u_norm == 0.0 {
            return true;
        }
        u.iter_mut().for_each(|x| *x /= u_norm);
        let c = inner(&u, &self.z);
        for (zi, ui) in self.z.iter_mut().zip(&u) {
            *zi -= c * ui;
        }
        self.basis.push(u);
        false
    }
}
