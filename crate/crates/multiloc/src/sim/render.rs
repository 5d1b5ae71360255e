//! Multichannel mixtures: image-method convolution and free-field plane waves.

use multiloc_core::geometry::{dot, sub};
use multiloc_core::{MicArray, Vec3};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::rir::{add_fractional_impulse, ImageSource, Rir, HALF_TAPS};
use super::scenario::Scenario;
use crate::wav::Audio;
use crate::{Error, Result};

/// Linear convolution through a zero-padded FFT.
pub fn convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let (fwd, inv) = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
    let pad = |v: &[f64]| {
        let mut buf: Vec<Complex64> = v.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        buf.resize(n, Complex64::new(0.0, 0.0));
        buf
    };
    let (mut a, mut b) = (pad(x), pad(h));
    fwd.process(&mut a);
    fwd.process(&mut b);
    a.iter_mut().zip(&b).for_each(|(p, q)| *p *= q);
    inv.process(&mut a);
    a[..out_len].iter().map(|z| z.re / n as f64).collect()
}

fn unit_rms(signal: &[f64]) -> Vec<f64> {
    let rms = (signal.iter().map(|v| v * v).sum::<f64>() / signal.len().max(1) as f64).sqrt();
    if rms == 0.0 {
        signal.to_vec()
    } else {
        signal.iter().map(|v| v / rms).collect()
    }
}

/// Sums each unit-RMS source convolved with its per-microphone response.
/// `rirs[t][m]` maps source `t` to microphone `m`; the RIR offset is removed
/// so sample 0 is the emission time. Shorter results are zero-padded.
pub fn render_mixture(rirs: &[Vec<Rir>], signals: &[Vec<f64>], fs: f64) -> Result<Audio> {
    if rirs.len() != signals.len() {
        return Err(Error::Data(format!(
            "{} responses for {} signals",
            rirs.len(),
            signals.len()
        )));
    }
    let m = rirs.first().map_or(0, Vec::len);
    if rirs.iter().any(|r| r.len() != m) {
        return Err(Error::Data(
            "every source needs one response per microphone".into(),
        ));
    }
    let mut channels = vec![Vec::<f64>::new(); m];
    for (responses, signal) in rirs.iter().zip(signals) {
        let s = unit_rms(signal);
        for (ch, rir) in channels.iter_mut().zip(responses) {
            let y = convolve(&s, &rir.taps);
            let y = &y[rir.offset.min(y.len())..];
            if ch.len() < y.len() {
                ch.resize(y.len(), 0.0);
            }
            ch.iter_mut().zip(y).for_each(|(a, b)| *a += b);
        }
    }
    let len = channels.iter().map(Vec::len).max().unwrap_or(0);
    channels.iter_mut().for_each(|c| c.resize(len, 0.0));
    Ok(Audio { fs, channels })
}

/// Renders a scenario's sources at its microphones.
pub fn render_scenario(
    scenario: &Scenario,
    array: &MicArray,
    sim: &ImageSource,
    signals: &[Vec<f64>],
) -> Result<Audio> {
    let mics = scenario.array_pose.mic_positions(array);
    let rirs: Vec<Vec<Rir>> = scenario
        .source_positions
        .iter()
        .map(|s| mics.iter().map(|m| sim.rir(s, m)).collect())
        .collect();
    render_mixture(&rirs, signals, sim.fs)
}

/// Far-field plane waves arriving from unit directions `doas` (array frame).
/// Microphone `m` hears source `t` advanced by `(r_m · doa_t) fs / c` samples,
/// applied with the same windowed-sinc interpolator as the room responses.
/// The output has the length of the longest signal.
pub fn render_plane_waves(
    array: &MicArray,
    doas: &[Vec3],
    signals: &[Vec<f64>],
    fs: f64,
    c: f64,
) -> Result<Audio> {
    if doas.len() != signals.len() {
        return Err(Error::Data(format!(
            "{} directions for {} signals",
            doas.len(),
            signals.len()
        )));
    }
    let len = signals.iter().map(Vec::len).max().unwrap_or(0);
    let offset = HALF_TAPS + (array.max_spacing() / c * fs).ceil() as usize + 1;
    let centroid = array.centroid();
    let rirs: Vec<Vec<Rir>> = doas
        .iter()
        .map(|doa| {
            array
                .positions()
                .iter()
                .map(|p| {
                    let advance = dot(&sub(p, &centroid), doa) / c * fs;
                    let mut taps = vec![0.0; 2 * offset + 1];
                    add_fractional_impulse(&mut taps, offset as f64 - advance, 1.0);
                    Rir { taps, fs, offset }
                })
                .collect()
        })
        .collect();
    let mut audio = render_mixture(&rirs, signals, fs)?;
    audio.channels.iter_mut().for_each(|ch| ch.truncate(len));
    Ok(audio)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convolution_matches_direct_sum() {
        let x = [1.0, -2.0, 0.5, 3.0];
        let h = [0.25, 0.0, -1.0];
        let direct: Vec<f64> = (0..x.len() + h.len() - 1)
            .map(|n| {
                (0..h.len())
                    .filter(|&k| n >= k && n - k < x.len())
                    .map(|k| h[k] * x[n - k])
                    .sum()
            })
            .collect();
        for (a, b) in convolve(&x, &h).iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn integer_advance_is_a_shift() {
        let array = MicArray::new("pair", vec![[-0.0425, 0.0, 0.0], [0.0425, 0.0, 0.0]]).unwrap();
        let signal: Vec<f64> = (0..400)
            .map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0)
            .collect();
        // 0.0425 m at 16 kHz and 340 m/s is exactly 2 samples.
        let audio =
            render_plane_waves(&array, &[[1.0, 0.0, 0.0]], &[signal], 16000.0, 340.0).unwrap();
        let (a, b) = (&audio.channels[0], &audio.channels[1]);
        for n in 10..390 {
            assert!((b[n] - a[n + 4]).abs() < 1e-9);
        }
    }

    #[test]
    fn mixture_is_linear() {
        let rir = |taps: Vec<f64>| Rir {
            taps,
            fs: 16000.0,
            offset: 1,
        };
        let rirs = vec![
            vec![rir(vec![0.0, 1.0, 0.5]), rir(vec![0.2, 0.0, 0.0, 0.7])],
            vec![rir(vec![0.0, 0.3]), rir(vec![1.0])],
        ];
        let s1 = vec![1.0, -1.0, 2.0, 0.0];
        let silent = vec![0.0; 3];
        let both = render_mixture(&rirs, &[s1.clone(), silent], 16000.0).unwrap();
        let alone = render_mixture(&rirs[..1], std::slice::from_ref(&s1), 16000.0).unwrap();
        for (a, b) in both.channels.iter().zip(&alone.channels) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        let scaled: Vec<f64> = s1.iter().map(|v| 3.0 * v).collect();
        // sources are RMS-normalized, so input gain does not change the output
        let louder = render_mixture(&rirs[..1], &[scaled], 16000.0).unwrap();
        assert_eq!(louder.channels.len(), alone.channels.len());
        for (a, b) in louder.channels.iter().zip(&alone.channels) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
