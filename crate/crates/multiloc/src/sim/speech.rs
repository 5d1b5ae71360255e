//! Speech-like test signals: noise shaped by a speech-band spectrum and
//! random formants, gated by syllable-rate envelopes with short pauses.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-pole resonator `y[n] = g x[n] + a1 y[n-1] + a2 y[n-2]` at `freq` with `bandwidth`.
#[derive(Debug, Clone)]
struct Resonator {
    a1: f64,
    a2: f64,
    gain: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bandwidth: f64, fs: f64) -> Self {
        let r = (-PI * bandwidth / fs).exp();
        let theta = TAU * freq / fs;
        Self {
            a1: 2.0 * r * theta.cos(),
            a2: -r * r,
            gain: 1.0 - r,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.gain * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

/// Zero-mean, unit-variance uniform noise.
fn white(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..1.0) * 3f64.sqrt()
}

/// Deterministic speech-like signal of `duration` seconds, normalized to unit RMS.
pub fn synth_speech_like(seed: u64, duration: f64, fs: f64) -> Vec<f64> {
    assert!(
        duration > 0.0 && fs > 0.0,
        "duration and fs must be positive"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = (duration * fs).round().max(1.0) as usize;
    let mut out = vec![0.0; len];
    // one-pole low-pass near 700 Hz: flat below, -6 dB/octave above
    let pole = (-TAU * 700.0 / fs).exp();
    let mut tilt = 0.0;
    let mut pos = (rng.random_range(0.0..0.05) * fs) as usize;
    while pos < len {
        let syllable = ((rng.random_range(0.1..0.3) * fs) as usize).min(len - pos);
        let level = rng.random_range(0.5..1.0);
        let mut formants = [
            Resonator::new(rng.random_range(300.0..800.0), 150.0, fs),
            Resonator::new(rng.random_range(900.0..2300.0), 200.0, fs),
            Resonator::new(
                rng.random_range(2400.0f64..3200.0).min(0.45 * fs),
                300.0,
                fs,
            ),
        ];
        let weights = [1.0, 0.6, 0.3];
        let mut segment = Vec::with_capacity(syllable);
        for _ in 0..syllable {
            let x = white(&mut rng);
            tilt = (1.0 - pole) * x + pole * tilt;
            let peaks: f64 = formants
                .iter_mut()
                .zip(weights)
                .map(|(f, w)| w * f.step(x))
                .sum();
            segment.push(tilt + 4.0 * peaks);
        }
        let seg_rms = rms(&segment).max(1e-300);
        for (i, v) in segment.iter().enumerate() {
            // raised-cosine syllable envelope
            let env = 0.5 - 0.5 * (TAU * (i as f64 + 0.5) / syllable as f64).cos();
            out[pos + i] = level * env * v / seg_rms;
        }
        pos += syllable + (rng.random_range(0.03..0.15) * fs) as usize;
    }
    let total = rms(&out);
    if total > 0.0 {
        out.iter_mut().for_each(|v| *v /= total);
    }
    out
}
