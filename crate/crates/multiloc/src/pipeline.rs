//! Frame-by-frame localization sharing one spectral front end between methods.

use std::sync::Arc;

use multiloc_core::spectral::Stft;
use multiloc_core::{
    CrossSpectrumState, DoaGrid, MicArray, NeighborSets, NullRangeTable, ScanResult, SrpPhat,
    SvdPhatModel, TdoaTable,
};

use crate::config::RunConfig;
use crate::{Error, Result};

/// Results for one analysis frame. A method that was not run is `None`; a
/// silent frame gives empty results.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame: usize,
    pub time_s: f64,
    pub srp: Option<ScanResult>,
    pub svd: Option<ScanResult>,
}

impl FrameResult {
    pub fn is_silent(&self) -> bool {
        self.srp.as_ref().is_none_or(ScanResult::is_empty)
            && self.svd.as_ref().is_none_or(ScanResult::is_empty)
    }
}

/// Immutable localization setup; cheap to clone and share across threads.
#[derive(Debug, Clone)]
pub struct Localizer {
    config: RunConfig,
    array: MicArray,
    grid: Arc<DoaGrid>,
    srp: Option<Arc<SrpPhat>>,
    svd: Option<Arc<SvdPhatModel>>,
}

pub fn build_grid(config: &RunConfig) -> Result<DoaGrid> {
    Ok(DoaGrid::icosphere(config.grid_level)?)
}

pub fn build_model(config: &RunConfig, array: &MicArray, grid: &DoaGrid) -> Result<SvdPhatModel> {
    let tdoa = TdoaTable::new(array, grid, config.fs, config.c)?;
    Ok(SvdPhatModel::build(
        grid,
        &tdoa,
        config.frame,
        config.delta,
    )?)
}

impl Localizer {
    /// Builds the tables the configured methods need. A missing SVD-PHAT
    /// model is computed here; a supplied one must match the configuration.
    pub fn new(
        config: &RunConfig,
        array: MicArray,
        model: Option<Arc<SvdPhatModel>>,
    ) -> Result<Self> {
        config.validate()?;
        let grid = Arc::new(build_grid(config)?);
        let srp = if config.method.runs_srp() {
            let tdoa = TdoaTable::new(&array, &grid, config.fs, config.c)?;
            let neighbors = NeighborSets::new(&grid, config.dtheta)?;
            let nulls = NullRangeTable::new(&tdoa, &neighbors)?;
            Some(Arc::new(SrpPhat::new(&grid, &tdoa, nulls, config.frame)?))
        } else {
            None
        };
        let svd = if config.method.runs_svd() {
            let model = match model {
                Some(m) => m,
                None => Arc::new(build_model(config, &array, &grid)?),
            };
            if model.num_pairs() != array.num_pairs()
                || model.frame_size() != config.frame
                || model.num_directions() != grid.len()
            {
                return Err(Error::Data(format!(
                    "model (Q={}, P={}, N={}) does not match configuration (Q={}, P={}, N={})",
                    model.num_directions(),
                    model.num_pairs(),
                    model.frame_size(),
                    grid.len(),
                    array.num_pairs(),
                    config.frame
                )));
            }
            Some(model)
        } else {
            None
        };
        Ok(Self {
            config: config.clone(),
            array,
            grid,
            srp,
            svd,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn array(&self) -> &MicArray {
        &self.array
    }

    pub fn grid(&self) -> &DoaGrid {
        &self.grid
    }

    pub fn srp(&self) -> Option<&SrpPhat> {
        self.srp.as_deref()
    }

    pub fn model(&self) -> Option<&SvdPhatModel> {
        self.svd.as_deref()
    }

    /// Localizes every full frame of channel-major audio with `scans` scans.
    pub fn process(&self, channels: &[Vec<f64>], scans: usize) -> Result<Vec<FrameResult>> {
        if channels.len() != self.array.num_mics() {
            return Err(Error::Data(format!(
                "{} channels for {} microphones",
                channels.len(),
                self.array.num_mics()
            )));
        }
        let stft_cfg = self.config.stft();
        let stft = Stft::new(stft_cfg, channels.len())?;
        let mut state =
            CrossSpectrumState::new(channels.len(), stft_cfg.num_bins(), self.config.alpha)?;
        let (n, hop) = (self.config.frame, self.config.hop);
        let len = channels.iter().map(Vec::len).min().unwrap_or(0);
        let frames = if len >= n { (len - n) / hop + 1 } else { 0 };
        let mut out = Vec::with_capacity(frames);
        for l in 0..frames {
            let frame: Vec<&[f64]> = channels.iter().map(|c| &c[l * hop..l * hop + n]).collect();
            state.update(&stft.analyze(&frame)?)?;
            let phat = state.phat();
            let silent = phat.as_slice().iter().all(|z| z.re == 0.0 && z.im == 0.0);
            let srp = self
                .srp
                .as_ref()
                .map(|s| {
                    if silent {
                        Ok(ScanResult::default())
                    } else {
                        s.localize(&phat, scans)
                    }
                })
                .transpose()?;
            let svd = self
                .svd
                .as_ref()
                .map(|m| m.localize(&phat, scans))
                .transpose()?;
            out.push(FrameResult {
                frame: l,
                time_s: (l * hop) as f64 / self.config.fs,
                srp,
                svd,
            });
        }
        Ok(out)
    }
}
