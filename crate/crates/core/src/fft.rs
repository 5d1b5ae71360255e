//! Small in-place complex FFT.
//!
//! Iterative radix-2 for power-of-two lengths; other lengths fall back to a
//! direct DFT. Neither direction is normalized.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    /// `exp(-2πi k / len)` for `k < len`.
    twiddles: Vec<Complex64>,
    bit_reverse: Vec<usize>,
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        let twiddles = (0..len)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64))
            .collect();
        let bit_reverse = if len.is_power_of_two() {
            let bits = len.trailing_zeros();
            (0..len)
                .map(|i| {
                    if bits == 0 {
                        0
                    } else {
                        i.reverse_bits() >> (usize::BITS - bits)
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            len,
            twiddles,
            bit_reverse,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `X[k] = Σ x[n] e^{-2πi kn/N}`
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// `x[n] = Σ X[k] e^{+2πi kn/N}` (no `1/N` factor).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    fn twiddle(&self, index: usize, inverse: bool) -> Complex64 {
        let w = self.twiddles[index % self.len];
        if inverse {
            w.conj()
        } else {
            w
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(
            data.len(),
            self.len,
            "buffer length does not match FFT length"
        );
        if self.bit_reverse.is_empty() {
            let input: Vec<Complex64> = data.to_vec();
            for (k, out) in data.iter_mut().enumerate() {
                *out = input
                    .iter()
                    .enumerate()
                    .map(|(n, &x)| x * self.twiddle(k * n, inverse))
                    .sum();
            }
            return;
        }

        for (i, &j) in self.bit_reverse.iter().enumerate() {
            if i < j {
                data.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= self.len {
            let half = size / 2;
            let stride = self.len / size;
            for start in (0..self.len).step_by(size) {
                for k in 0..half {
                    let w = self.twiddle(k * stride, inverse);
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn direct(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|t| {
                        x[t] * Complex64::from_polar(
                            1.0,
                            sign * 2.0 * PI * (k * t) as f64 / n as f64,
                        )
                    })
                    .sum()
            })
            .collect()
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<Complex64> {
        let mut s = seed;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        (0..n).map(|_| Complex64::new(next(), next())).collect()
    }

    #[test]
    fn matches_direct_dft() {
        for &n in &[1usize, 2, 8, 64, 512, 6, 12] {
            let x = pseudo_random(n, n as u64);
            let mut fwd = x.clone();
            Fft::new(n).forward(&mut fwd);
            let mut inv = x.clone();
            Fft::new(n).inverse(&mut inv);
            for (a, b) in fwd.iter().zip(direct(&x, -1.0)) {
                assert!((a - b).norm() < 1e-9, "forward n={n}");
            }
            for (a, b) in inv.iter().zip(direct(&x, 1.0)) {
                assert!((a - b).norm() < 1e-9, "inverse n={n}");
            }
        }
    }

    #[test]
    fn round_trip_scales_by_length() {
        let x = pseudo_random(256, 3);
        let mut y = x.clone();
        let fft = Fft::new(256);
        fft.forward(&mut y);
        fft.inverse(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a * 256.0 - b).norm() < 1e-9);
        }
    }

    #[test]
    fn impulse_is_flat() {
        let mut x = vec![Complex64::new(0.0, 0.0); 16];
        x[0] = Complex64::new(1.0, 0.0);
        Fft::new(16).forward(&mut x);
        assert!(x
            .iter()
            .all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }
}
