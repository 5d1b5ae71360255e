//! Discrete multi-source SRP-PHAT.
//!
//! GCC-PHAT is evaluated at integer lags with one inverse FFT per pair, the
//! steered power reads each pair's GCC at the rounded TDOA of every grid
//! direction, and after each scan the lag interval around the winner is
//! zeroed so the next scan sees the remaining sources.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fft::Fft;
use crate::geometry::{DoaGrid, NullRangeTable, TdoaTable};
use crate::scan::{argmax, Estimate, ScanResult};
use crate::spectral::PhatVector;
use crate::{Error, Result, Vec3};

/// `gcc[p * N + n]` is `x_p[n]` for lag `n` in `0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GccTensor {
    num_pairs: usize,
    frame_size: usize,
    data: Vec<f64>,
}

impl GccTensor {
    pub fn zeros(num_pairs: usize, frame_size: usize) -> Self {
        Self {
            num_pairs,
            frame_size,
            data: vec![0.0; num_pairs * frame_size],
        }
    }

    pub fn num_pairs(&self) -> usize {
        self.num_pairs
    }

    pub fn frame_size(&self) -> usize {
        self.frame_size
    }

    pub fn pair(&self, p: usize) -> &[f64] {
        &self.data[p * self.frame_size..(p + 1) * self.frame_size]
    }

    pub fn pair_mut(&mut self, p: usize) -> &mut [f64] {
        &mut self.data[p * self.frame_size..(p + 1) * self.frame_size]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// `x_p[n] = Re Σ_{k=0}^{N/2} X̂_p[k] e^{2πi kn/N}`, via a length-`N` inverse
/// FFT of the half spectrum with bins above `N/2` left at zero.
pub fn gcc_phat(phat: &PhatVector, fft: &Fft) -> Result<GccTensor> {
    let n = fft.len();
    if phat.num_bins() != n / 2 + 1 {
        return Err(Error::DimensionMismatch {
            what: "PHAT bins",
            expected: n / 2 + 1,
            got: phat.num_bins(),
        });
    }
    let mut gcc = GccTensor::zeros(phat.num_pairs(), n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for p in 0..phat.num_pairs() {
        buf[..=n / 2].copy_from_slice(phat.pair(p));
        buf[n / 2 + 1..].fill(Complex64::new(0.0, 0.0));
        fft.inverse(&mut buf);
        for (out, z) in gcc.pair_mut(p).iter_mut().zip(&buf) {
            *out = z.re;
        }
    }
    Ok(gcc)
}

/// `Y_q = Σ_p x_p[⌊τ_pq⌉ mod N]`
pub fn steered_power(gcc: &GccTensor, tdoa: &TdoaTable) -> Result<Vec<f64>> {
    check_pairs(gcc, tdoa.num_pairs())?;
    let n = gcc.frame_size() as i64;
    let mut y = vec![0.0; tdoa.num_directions()];
    for p in 0..tdoa.num_pairs() {
        let row = gcc.pair(p);
        for (acc, &lag) in y.iter_mut().zip(tdoa.pair_row_rounded(p)) {
            *acc += row[lag.rem_euclid(n) as usize];
        }
    }
    Ok(y)
}

/// Zeroes lags `τ mod N` for every integer `τ` in each pair's interval for `q_star`.
pub fn null_gcc(gcc: &mut GccTensor, ranges: &NullRangeTable, q_star: usize) -> Result<()> {
    if q_star >= ranges.num_directions() {
        return Err(Error::InvalidParameter("direction index out of range"));
    }
    let n = gcc.frame_size() as i64;
    for p in 0..gcc.num_pairs() {
        let (lo, hi) = ranges.range(p, q_star);
        let row = gcc.pair_mut(p);
        // an interval wider than N would wrap onto itself
        let hi = hi.min(lo + n - 1);
        for tau in lo..=hi {
            row[tau.rem_euclid(n) as usize] = 0.0;
        }
    }
    Ok(())
}

fn check_pairs(gcc: &GccTensor, expected: usize) -> Result<()> {
    if gcc.num_pairs() != expected {
        return Err(Error::DimensionMismatch {
            what: "pair count",
            expected,
            got: gcc.num_pairs(),
        });
    }
    Ok(())
}

/// Precomputed tables for repeated multi-scan SRP-PHAT over one array and grid.
#[derive(Debug, Clone)]
pub struct SrpPhat {
    fft: Fft,
    directions: Vec<Vec3>,
    num_pairs: usize,
    /// `⌊τ_pq⌉ mod N`, pair-major.
    lags: Vec<usize>,
    null_ranges: NullRangeTable,
}

impl SrpPhat {
    pub fn new(
        grid: &DoaGrid,
        tdoa: &TdoaTable,
        null_ranges: NullRangeTable,
        frame_size: usize,
    ) -> Result<Self> {
        if tdoa.num_directions() != grid.len() || null_ranges.num_directions() != grid.len() {
            return Err(Error::DimensionMismatch {
                what: "grid size",
                expected: grid.len(),
                got: tdoa.num_directions(),
            });
        }
        if frame_size == 0 || !frame_size.is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "frame size must be even and positive",
            ));
        }
        let n = frame_size as i64;
        let lags = (0..tdoa.num_pairs())
            .flat_map(|p| {
                tdoa.pair_row_rounded(p)
                    .iter()
                    .map(move |&t| t.rem_euclid(n) as usize)
            })
            .collect();
        Ok(Self {
            fft: Fft::new(frame_size),
            directions: grid.directions().to_vec(),
            num_pairs: tdoa.num_pairs(),
            lags,
            null_ranges,
        })
    }

    pub fn num_directions(&self) -> usize {
        self.directions.len()
    }

    pub fn gcc(&self, phat: &PhatVector) -> Result<GccTensor> {
        gcc_phat(phat, &self.fft)
    }

    pub fn steered_power(&self, gcc: &GccTensor) -> Result<Vec<f64>> {
        check_pairs(gcc, self.num_pairs)?;
        let q_len = self.directions.len();
        let mut y = vec![0.0; q_len];
        for p in 0..self.num_pairs {
            let row = gcc.pair(p);
            for (acc, &lag) in y.iter_mut().zip(&self.lags[p * q_len..(p + 1) * q_len]) {
                *acc += row[lag];
            }
        }
        Ok(y)
    }

    /// Runs `scans` rounds of argmax and nulling over `gcc`, consuming it.
    pub fn localize_gcc(&self, mut gcc: GccTensor, scans: usize) -> Result<ScanResult> {
        if scans == 0 {
            return Err(Error::InvalidParameter("scan count must be at least 1"));
        }
        let mut result = ScanResult::default();
        for _ in 0..scans {
            let y = self.steered_power(&gcc)?;
            let q = argmax(&y).ok_or(Error::InvalidParameter("empty grid"))?;
            null_gcc(&mut gcc, &self.null_ranges, q)?;
            result.estimates.push(Estimate {
                q,
                doa: self.directions[q],
                energy: y[q],
                duplicate: false,
            });
        }
        Ok(result)
    }

    pub fn localize(&self, phat: &PhatVector, scans: usize) -> Result<ScanResult> {
        self.localize_gcc(self.gcc(phat)?, scans)
    }
}
