//! STFT analysis, recursively smoothed cross-spectra and PHAT weighting.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // float math comes from here only without std
use num_traits::Float;

use crate::fft::Fft;
use crate::{Error, Result};

/// Cross-spectrum magnitudes below this are treated as empty bins.
pub const PHAT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftConfig {
    pub frame_size: usize,
    pub hop: usize,
    pub fs: f64,
    pub window: Window,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            frame_size: 512,
            hop: 128,
            fs: 16000.0,
            window: Window::Hann,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frame_size == 0 || !self.frame_size.is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "frame size must be even and positive",
            ));
        }
        if self.hop == 0 || self.hop > self.frame_size {
            return Err(Error::InvalidParameter("hop must lie in 1..=frame size"));
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::InvalidParameter("sample rate must be positive"));
        }
        Ok(())
    }

    /// `N/2 + 1`
    pub fn num_bins(&self) -> usize {
        self.frame_size / 2 + 1
    }
}

/// Windowed FFT of one multichannel frame.
#[derive(Debug, Clone)]
pub struct Stft {
    config: StftConfig,
    num_channels: usize,
    window: Vec<f64>,
    fft: Fft,
}

impl Stft {
    pub fn new(config: StftConfig, num_channels: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            num_channels,
            window: config.window.coefficients(config.frame_size),
            fft: Fft::new(config.frame_size),
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    /// Half spectra `[M][N/2 + 1]` of exactly `N` samples per channel.
    pub fn analyze<S: AsRef<[f64]>>(&self, frame: &[S]) -> Result<Vec<Vec<Complex64>>> {
        if frame.len() != self.num_channels {
            return Err(Error::DimensionMismatch {
                what: "channel count",
                expected: self.num_channels,
                got: frame.len(),
            });
        }
        let n = self.config.frame_size;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        frame
            .iter()
            .map(|channel| {
                let channel = channel.as_ref();
                if channel.len() != n {
                    return Err(Error::DimensionMismatch {
                        what: "frame length",
                        expected: n,
                        got: channel.len(),
                    });
                }
                for ((b, &x), &w) in buf.iter_mut().zip(channel).zip(&self.window) {
                    *b = Complex64::new(x * w, 0.0);
                }
                self.fft.forward(&mut buf);
                Ok(buf[..=n / 2].to_vec())
            })
            .collect()
    }
}

/// `X_ij[k]` for every pair, smoothed over frames.
#[derive(Debug, Clone)]
pub struct CrossSpectrumState {
    pairs: Vec<(usize, usize)>,
    num_mics: usize,
    num_bins: usize,
    alpha: f64,
    xspec: Vec<Complex64>,
    frame_index: u64,
}

impl CrossSpectrumState {
    pub fn new(num_mics: usize, num_bins: usize, alpha: f64) -> Result<Self> {
        if num_mics < 2 {
            return Err(Error::TooFewMicrophones(num_mics));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter("alpha must lie in [0, 1]"));
        }
        let pairs: Vec<(usize, usize)> = (0..num_mics)
            .flat_map(|i| (i + 1..num_mics).map(move |j| (i, j)))
            .collect();
        let xspec = vec![Complex64::new(0.0, 0.0); pairs.len() * num_bins];
        Ok(Self {
            pairs,
            num_mics,
            num_bins,
            alpha,
            xspec,
            frame_index: 0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn pair(&self, p: usize) -> &[Complex64] {
        &self.xspec[p * self.num_bins..(p + 1) * self.num_bins]
    }

    /// `X_ij ← (1 - α) X_ij + α X_i X_j*`
    pub fn update<S: AsRef<[Complex64]>>(&mut self, spectra: &[S]) -> Result<()> {
        if spectra.len() != self.num_mics {
            return Err(Error::DimensionMismatch {
                what: "channel count",
                expected: self.num_mics,
                got: spectra.len(),
            });
        }
        if let Some(bad) = spectra.iter().find(|s| s.as_ref().len() != self.num_bins) {
            return Err(Error::DimensionMismatch {
                what: "bin count",
                expected: self.num_bins,
                got: bad.as_ref().len(),
            });
        }
        let (a, keep) = (self.alpha, 1.0 - self.alpha);
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            let (xi, xj) = (spectra[i].as_ref(), spectra[j].as_ref());
            let row = &mut self.xspec[p * self.num_bins..(p + 1) * self.num_bins];
            for ((acc, si), sj) in row.iter_mut().zip(xi).zip(xj) {
                *acc = *acc * keep + si * sj.conj() * a;
            }
        }
        self.frame_index += 1;
        Ok(())
    }

    pub fn phat(&self) -> PhatVector {
        PhatVector {
            num_pairs: self.pairs.len(),
            num_bins: self.num_bins,
            data: self.xspec.iter().map(|&z| phat_normalize(z)).collect(),
        }
    }
}

/// `z / |z|`, or zero when `|z|` is below [`PHAT_EPSILON`].
#[inline]
pub fn phat_normalize(z: Complex64) -> Complex64 {
    let m = z.norm();
    if m < PHAT_EPSILON {
        Complex64::new(0.0, 0.0)
    } else {
        z / m
    }
}

/// PHAT-weighted cross-spectra, flattened pair-major: `(0,1)` bins `0..=N/2`,
/// then `(0,2)`, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct PhatVector {
    num_pairs: usize,
    num_bins: usize,
    data: Vec<Complex64>,
}

impl PhatVector {
    pub fn from_flat(num_pairs: usize, num_bins: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != num_pairs * num_bins {
            return Err(Error::DimensionMismatch {
                what: "PHAT vector length",
                expected: num_pairs * num_bins,
                got: data.len(),
            });
        }
        Ok(Self {
            num_pairs,
            num_bins,
            data,
        })
    }

    /// Normalizes every entry of a raw cross-spectrum vector.
    pub fn from_cross_spectra(
        num_pairs: usize,
        num_bins: usize,
        raw: &[Complex64],
    ) -> Result<Self> {
        Self::from_flat(
            num_pairs,
            num_bins,
            raw.iter().map(|&z| phat_normalize(z)).collect(),
        )
    }

    pub fn num_pairs(&self) -> usize {
        self.num_pairs
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn pair(&self, p: usize) -> &[Complex64] {
        &self.data[p * self.num_bins..(p + 1) * self.num_bins]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}
