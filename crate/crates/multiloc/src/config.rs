//! Run and campaign configuration. Defaults reproduce the reference setup:
//! 16 kHz, 512-sample frames with a 128-sample hop, α = 0.1, δ = 1e-5,
//! Δθ = 0.1745 rad, a 2562-point grid and c = 340 m/s.

use std::fs;
use std::path::Path;

use multiloc_core::spectral::{StftConfig, Window};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Srp,
    Svd,
    Both,
}

impl MethodChoice {
    pub fn runs_srp(self) -> bool {
        matches!(self, Self::Srp | Self::Both)
    }

    pub fn runs_svd(self) -> bool {
        matches!(self, Self::Svd | Self::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Preset name or array JSON path.
    pub geometry: String,
    pub grid_level: u32,
    pub fs: f64,
    pub frame: usize,
    pub hop: usize,
    pub alpha: f64,
    pub delta: f64,
    pub dtheta: f64,
    pub c: f64,
    pub scans: usize,
    pub method: MethodChoice,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: "spatial7".to_string(),
            grid_level: 4,
            fs: 16000.0,
            frame: 512,
            hop: 128,
            alpha: 0.1,
            delta: 1e-5,
            dtheta: 0.1745,
            c: 340.0,
            scans: 1,
            method: MethodChoice::Both,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn stft(&self) -> StftConfig {
        StftConfig {
            frame_size: self.frame,
            hop: self.hop,
            fs: self.fs,
            window: Window::Hann,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stft()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.grid_level > multiloc_core::geometry::MAX_GRID_LEVEL {
            return Err(Error::Config(format!(
                "grid level {} exceeds {}",
                self.grid_level,
                multiloc_core::geometry::MAX_GRID_LEVEL
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config("alpha must lie in [0, 1]".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config("delta must lie in (0, 1)".into()));
        }
        if !(self.dtheta > 0.0 && self.dtheta < std::f64::consts::PI) {
            return Err(Error::Config("dtheta must lie in (0, pi)".into()));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config("speed of sound must be positive".into()));
        }
        if self.scans == 0 {
            return Err(Error::Config("at least one scan is required".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_json(path)
    }
}

pub(crate) fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
