//! Per-frame online cost of SRP-PHAT and SVD-PHAT on a synthetic stream.

use std::time::Instant;

use multiloc_core::spectral::Stft;
use multiloc_core::CrossSpectrumState;
use serde::{Deserialize, Serialize};

use crate::pipeline::Localizer;
use crate::sim::{render_plane_waves, synth_speech_like};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    /// Median wall time of one full frame (all scans), microseconds.
    pub median_frame_us: f64,
    /// Median time of the search part of one scan, microseconds.
    pub median_scan_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub geometry: String,
    pub directions: usize,
    pub pairs: usize,
    pub frame_size: usize,
    pub rank: usize,
    pub scans: usize,
    pub frames: usize,
    pub srp: MethodTiming,
    pub svd: MethodTiming,
    /// Median time of the SVD-PHAT projection `Z = V^H X`, microseconds.
    pub svd_projection_us: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn micros(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e6
}

/// Times both methods over `frames` frames of a speech-like plane wave.
/// Needs a localizer running both methods.
pub fn run_bench(
    localizer: &Localizer,
    frames: usize,
    scans: usize,
    seed: u64,
) -> Result<BenchReport> {
    let (Some(srp), Some(model)) = (localizer.srp(), localizer.model()) else {
        return Err(Error::Config("benchmark needs both methods".into()));
    };
    if frames == 0 || scans == 0 {
        return Err(Error::Config("frames and scans must be positive".into()));
    }
    let cfg = localizer.config();
    let array = localizer.array();
    let samples = (frames - 1) * cfg.hop + cfg.frame;
    let signal = synth_speech_like(seed, samples as f64 / cfg.fs, cfg.fs);
    let doa = [0.48, 0.6, 0.64];
    let audio = render_plane_waves(array, &[doa], &[signal], cfg.fs, cfg.c)?;

    let stft = Stft::new(cfg.stft(), array.num_mics())?;
    let mut state = CrossSpectrumState::new(array.num_mics(), cfg.stft().num_bins(), cfg.alpha)?;
    let (mut srp_frame, mut srp_scan) = (Vec::new(), Vec::new());
    let (mut svd_frame, mut svd_scan, mut svd_proj) = (Vec::new(), Vec::new(), Vec::new());
    for l in 0..frames {
        let frame: Vec<&[f64]> = audio
            .channels
            .iter()
            .map(|c| &c[l * cfg.hop..l * cfg.hop + cfg.frame])
            .collect();
        state.update(&stft.analyze(&frame)?)?;
        let phat = state.phat();

        let start = Instant::now();
        let gcc = srp.gcc(&phat)?;
        let scan_start = Instant::now();
        let result = srp.localize_gcc(gcc, scans)?;
        srp_scan.push(micros(scan_start) / scans as f64);
        srp_frame.push(micros(start));
        std::hint::black_box(result);

        let start = Instant::now();
        let z = model.project(&phat)?;
        svd_proj.push(micros(start));
        let scan_start = Instant::now();
        let result = model.localize_projection(z, scans)?;
        svd_scan.push(micros(scan_start) / scans as f64);
        svd_frame.push(micros(start));
        std::hint::black_box(result);
    }
    Ok(BenchReport {
        geometry: array.name().to_string(),
        directions: localizer.grid().len(),
        pairs: array.num_pairs(),
        frame_size: cfg.frame,
        rank: model.rank(),
        scans,
        frames,
        srp: MethodTiming {
            median_frame_us: median(&mut srp_frame),
            median_scan_us: median(&mut srp_scan),
        },
        svd: MethodTiming {
            median_frame_us: median(&mut svd_frame),
            median_scan_us: median(&mut svd_scan),
        },
        svd_projection_us: median(&mut svd_proj),
    })
}
