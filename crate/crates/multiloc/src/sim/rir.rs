//! Image-method room impulse responses for a shoebox room with uniform walls.

use std::f64::consts::PI;

use multiloc_core::geometry::{norm, sub};
use multiloc_core::Vec3;
use serde::{Deserialize, Serialize};

/// Half-length of the windowed-sinc interpolator (81 taps in total).
pub const HALF_TAPS: usize = 40;

/// Impulse response whose tap `i` sits at time `(i - offset) / fs`. The
/// offset leaves room for the interpolator's pre-ringing.
#[derive(Debug, Clone, PartialEq)]
pub struct Rir {
    pub taps: Vec<f64>,
    pub fs: f64,
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbsorptionModel {
    Sabine,
    Eyring,
    /// Coefficient tuned so the image model's own energy decay has the requested T30.
    Calibrated,
}

/// Uniform pressure reflection coefficient giving `rt60` in a room of these
/// dimensions, for sound speed `c`.
pub fn reflection_coefficient(room: &Vec3, rt60: f64, c: f64, model: AbsorptionModel) -> f64 {
    let [lx, ly, lz] = *room;
    let volume = lx * ly * lz;
    let surface = 2.0 * (lx * ly + lx * lz + ly * lz);
    let alpha = match model {
        AbsorptionModel::Sabine => 0.161 * volume / (surface * rt60),
        AbsorptionModel::Eyring => 1.0 - (-0.161 * volume / (surface * rt60)).exp(),
        AbsorptionModel::Calibrated => return calibrated_beta(room, rt60, c),
    };
    (1.0 - alpha.min(1.0)).sqrt()
}

/// Reverberation time from a decay curve via T30: the -5 dB to -35 dB span, doubled.
/// `energy[i]` is the energy arriving in bin `i` of width `dt` seconds.
pub fn schroeder_t30(energy: &[f64], dt: f64) -> Option<f64> {
    let mut edc = energy.to_vec();
    for i in (0..edc.len().saturating_sub(1)).rev() {
        edc[i] += edc[i + 1];
    }
    let total = *edc.first()?;
    if total <= 0.0 {
        return None;
    }
    let crossing = |db: f64| {
        let level = total * 10f64.powf(db / 10.0);
        edc.iter().position(|&e| e <= level)
    };
    let (a, b) = (crossing(-5.0)?, crossing(-35.0)?);
    Some(2.0 * (b - a) as f64 * dt)
}

/// Energy arriving per `dt` bin at a fixed interior source/receiver pair,
/// from every image within `c * horizon` meters.
fn energy_histogram(room: &Vec3, beta: f64, c: f64, horizon: f64, dt: f64) -> Vec<f64> {
    let source = [0.31 * room[0], 0.42 * room[1], 0.45 * room[2]];
    let mic = [0.63 * room[0], 0.55 * room[1], 0.52 * room[2]];
    let reach = c * horizon;
    let mut hist = vec![0.0; (horizon / dt).ceil() as usize + 1];
    for_each_image(room, &source, &mic, reach, None, |d, order| {
        hist[(d / c / dt) as usize] += beta.powi(2 * order as i32) / (d * d);
    });
    hist
}

/// Bisects the reflection coefficient whose image-model T30 equals `rt60`.
fn calibrated_beta(room: &Vec3, rt60: f64, c: f64) -> f64 {
    let dt = 1e-3;
    let t30 =
        |beta: f64| schroeder_t30(&energy_histogram(room, beta, c, rt60, dt), dt).unwrap_or(0.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if t30(mid) < rt60 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Calls `f(distance, reflections)` for every image of `source` within
/// `reach` of `mic` and at most `max_order` reflections.
fn for_each_image(
    room: &Vec3,
    source: &Vec3,
    mic: &Vec3,
    reach: f64,
    max_order: Option<u32>,
    mut f: impl FnMut(f64, u64),
) {
    let bound = |l: f64| (reach / (2.0 * l)).ceil() as i64 + 1;
    let [nx, ny, nz] = [bound(room[0]), bound(room[1]), bound(room[2])];
    for ix in -nx..=nx {
        for ux in 0..2 {
            let (px, rx) = image_coord(source[0], room[0], ix, ux);
            let dx = px - mic[0];
            for iy in -ny..=ny {
                for uy in 0..2 {
                    let (py, ry) = image_coord(source[1], room[1], iy, uy);
                    let dy = py - mic[1];
                    for iz in -nz..=nz {
                        for uz in 0..2 {
                            let (pz, rz) = image_coord(source[2], room[2], iz, uz);
                            let dz = pz - mic[2];
                            let order = rx + ry + rz;
                            if max_order.is_some_and(|m| order > m as u64) {
                                continue;
                            }
                            let d = (dx * dx + dy * dy + dz * dz).sqrt();
                            if d <= reach {
                                f(d, order);
                            }
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageSource {
    pub room: Vec3,
    pub beta: f64,
    pub fs: f64,
    pub c: f64,
    /// Images farther than this (meters) are dropped; the direct path is always kept.
    pub max_distance: f64,
    /// Images with more wall reflections than this are dropped. `Some(0)` is
    /// the direct path alone.
    pub max_order: Option<u32>,
    /// Apply the 100 Hz high-pass of Allen and Berkley, which removes the DC
    /// build-up of all-positive image amplitudes.
    pub high_pass: bool,
}

impl ImageSource {
    /// Room with reflection coefficient from `rt60`, keeping every image that
    /// arrives within `rt60` of the emission, i.e. the decay down to -60 dB.
    pub fn reverberant(room: Vec3, rt60: f64, fs: f64, c: f64, model: AbsorptionModel) -> Self {
        Self {
            room,
            beta: reflection_coefficient(&room, rt60, c, model),
            fs,
            c,
            max_distance: c * rt60,
            max_order: None,
            high_pass: true,
        }
    }

    pub fn anechoic(room: Vec3, fs: f64, c: f64) -> Self {
        Self {
            room,
            beta: 0.0,
            fs,
            c,
            max_distance: 0.0,
            max_order: Some(0),
            high_pass: false,
        }
    }

    pub fn rir(&self, source: &Vec3, mic: &Vec3) -> Rir {
        let direct = norm(&sub(source, mic));
        let reach = self.max_distance.max(direct);
        let samples = (reach / self.c * self.fs).ceil() as usize + 2 * HALF_TAPS + 2;
        let mut taps = vec![0.0; samples];
        for_each_image(
            &self.room,
            source,
            mic,
            reach,
            self.max_order,
            |d, order| {
                let gain = self.beta.powi(order as i32) / (4.0 * PI * d);
                if gain != 0.0 {
                    add_fractional_impulse(
                        &mut taps,
                        HALF_TAPS as f64 + d / self.c * self.fs,
                        gain,
                    );
                }
            },
        );
        if self.high_pass {
            high_pass(&mut taps, self.fs);
        }
        Rir {
            taps,
            fs: self.fs,
            offset: HALF_TAPS,
        }
    }
}

/// Two-pole high-pass at 100 Hz with a double zero at DC.
pub fn high_pass(taps: &mut [f64], fs: f64) {
    let w = 2.0 * PI * 100.0 / fs;
    let r = (-w).exp();
    let (b1, b2, a1) = (2.0 * r * w.cos(), -r * r, -(1.0 + r));
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in taps.iter_mut() {
        let y0 = b1 * y1 + b2 * y2 + *v;
        *v = y0 + a1 * y1 + r * y2;
        (y2, y1) = (y1, y0);
    }
}

/// Image coordinate `(1 - 2u) s + 2 l L` and its wall-reflection count `|l - u| + |l|`.
fn image_coord(s: f64, len: f64, l: i64, u: i64) -> (f64, u64) {
    (
        (1 - 2 * u) as f64 * s + 2.0 * l as f64 * len,
        (l - u).unsigned_abs() + l.unsigned_abs(),
    )
}

/// Adds `gain * w(n - delay) * sinc(n - delay)` for the 81 taps around `delay`,
/// with `w` a Hann window spanning the interpolator.
pub fn add_fractional_impulse(taps: &mut [f64], delay: f64, gain: f64) {
    let center = delay.round() as i64;
    let start = center - HALF_TAPS as i64;
    let t0 = start as f64 - delay;
    let width = HALF_TAPS as f64 + 1.0;
    // sin(π(t0 + k)) alternates sign; cos(π(t0 + k)/width) follows a rotation.
    let s0 = (PI * t0).sin();
    let (mut cr, mut ci) = ((PI * t0 / width).cos(), (PI * t0 / width).sin());
    let (sr, si) = ((PI / width).cos(), (PI / width).sin());
    for k in 0..=2 * HALF_TAPS {
        let n = start + k as i64;
        let t = t0 + k as f64;
        let sinc = if t.abs() < 1e-12 {
            1.0
        } else {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * s0 / (PI * t)
        };
        let window = 0.5 * (1.0 + cr);
        if n >= 0 && (n as usize) < taps.len() {
            taps[n as usize] += gain * window * sinc;
        }
        (cr, ci) = (cr * sr - ci * si, cr * si + ci * sr);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_tap(n: f64, delay: f64) -> f64 {
        let t = n - delay;
        if t.abs() > HALF_TAPS as f64 + 1.0 {
            return 0.0;
        }
        let sinc = if t == 0.0 {
            1.0
        } else {
            (PI * t).sin() / (PI * t)
        };
        sinc * 0.5 * (1.0 + (PI * t / (HALF_TAPS as f64 + 1.0)).cos())
    }

    #[test]
    fn fractional_impulse_matches_direct_formula() {
        for delay in [50.0, 50.3, 50.5, 61.77] {
            let mut taps = vec![0.0; 128];
            add_fractional_impulse(&mut taps, delay, 2.0);
            for (n, &v) in taps.iter().enumerate() {
                let expected = if (n as f64 - delay.round()).abs() <= HALF_TAPS as f64 {
                    2.0 * reference_tap(n as f64, delay)
                } else {
                    0.0
                };
                assert!((v - expected).abs() < 1e-12, "delay {delay} tap {n}");
            }
        }
    }

    #[test]
    fn direct_path_one_meter() {
        let sim = ImageSource::anechoic([10.0, 10.0, 3.0], 16000.0, 340.0);
        let rir = sim.rir(&[2.0, 2.0, 1.0], &[3.0, 2.0, 1.0]);
        let delay: f64 = 16000.0 / 340.0;
        assert!((delay - 47.06).abs() < 0.01);
        for (i, &v) in rir.taps.iter().enumerate() {
            let n = i as f64 - rir.offset as f64;
            let expected = if (n - delay.round()).abs() <= HALF_TAPS as f64 {
                reference_tap(n, delay) / (4.0 * PI)
            } else {
                0.0
            };
            assert!((v - expected).abs() < 1e-12);
        }
        let dc: f64 = rir.taps.iter().sum();
        assert!((dc - 1.0 / (4.0 * PI)).abs() < 2e-3 / (4.0 * PI));
    }

    #[test]
    fn amplitude_follows_inverse_distance() {
        let sim = ImageSource::anechoic([20.0, 20.0, 20.0], 16000.0, 340.0);
        let peak = |d: f64| {
            let rir = sim.rir(&[5.0, 5.0, 5.0], &[5.0 + d, 5.0, 5.0]);
            rir.taps.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        };
        // 0.85 m is an integer number of samples, so peaks are exact taps.
        assert!((peak(0.85) / peak(1.7) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn image_count_and_reflection_orders() {
        assert_eq!(image_coord(1.0, 4.0, 0, 0), (1.0, 0));
        assert_eq!(image_coord(1.0, 4.0, 0, 1), (-1.0, 1));
        assert_eq!(image_coord(1.0, 4.0, 1, 1), (7.0, 1));
        assert_eq!(image_coord(1.0, 4.0, 1, 0), (9.0, 2));
        assert_eq!(image_coord(1.0, 4.0, -1, 0), (-7.0, 2));
    }

    #[test]
    fn absorption_models() {
        let room = [10.0, 10.0, 3.0];
        let beta = |rt, model| reflection_coefficient(&room, rt, 340.0, model);
        let (sabine, eyring) = (
            beta(0.3, AbsorptionModel::Sabine),
            beta(0.3, AbsorptionModel::Eyring),
        );
        assert!(sabine > 0.0 && sabine < eyring && eyring < 1.0);
        // Absorption beyond 1 saturates to an anechoic boundary.
        assert_eq!(beta(1e-3, AbsorptionModel::Sabine), 0.0);
        let calibrated: Vec<f64> = [0.2, 0.35, 0.5]
            .iter()
            .map(|&rt| beta(rt, AbsorptionModel::Calibrated))
            .collect();
        assert!(
            calibrated[0] < calibrated[1] && calibrated[1] < calibrated[2] && calibrated[2] < 1.0
        );
    }

    #[test]
    fn t30_of_exponential_decay() {
        // energy falling 60 dB per 0.4 s
        let dt = 1e-3;
        let energy: Vec<f64> = (0..2000)
            .map(|i| 10f64.powf(-6.0 * i as f64 * dt / 0.4))
            .collect();
        let t = schroeder_t30(&energy, dt).unwrap();
        assert!((t - 0.4).abs() < 2.0 * dt, "{t}");
        assert_eq!(schroeder_t30(&[0.0; 4], dt), None);
    }
}
