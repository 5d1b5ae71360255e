//! CSV tables written by the CLI.

use std::io::Write;

use multiloc_core::eval::{Method, SummaryRow};
use serde::{Deserialize, Serialize};

use crate::pipeline::FrameResult;
use crate::Result;

/// One estimate of one scan in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub time_s: f64,
    pub method: String,
    pub scan_r: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub energy: f64,
}

pub fn estimate_rows(frames: &[FrameResult]) -> Vec<EstimateRow> {
    let mut rows = Vec::new();
    for f in frames {
        for (method, result) in [(Method::Srp, &f.srp), (Method::Svd, &f.svd)] {
            let Some(result) = result else { continue };
            for (r, e) in result.estimates.iter().enumerate() {
                rows.push(EstimateRow {
                    time_s: f.time_s,
                    method: method.as_str().to_string(),
                    scan_r: r + 1,
                    x: e.doa[0],
                    y: e.doa[1],
                    z: e.doa[2],
                    energy: e.energy,
                });
            }
        }
    }
    rows
}

/// Per-frame, per-source angular error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiRow {
    pub time_s: f64,
    pub method: String,
    pub source: usize,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub geometry: String,
    pub sources: usize,
    pub simulation: usize,
    pub seed: u64,
    pub rt60: f64,
    pub frames: usize,
    pub srp_rmse: f64,
    pub svd_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCsvRow {
    pub geometry: String,
    pub sources: usize,
    pub srp_rmse: Option<f64>,
    pub svd_rmse: Option<f64>,
    pub improvement: Option<f64>,
    pub simulations: usize,
}

impl From<&SummaryRow> for SummaryCsvRow {
    fn from(r: &SummaryRow) -> Self {
        Self {
            geometry: r.geometry.clone(),
            sources: r.sources,
            srp_rmse: r.srp_mean,
            svd_rmse: r.svd_mean,
            improvement: r.improvement(),
            simulations: r.simulations,
        }
    }
}

/// Writes `rows` with a header line, which is emitted even when `rows` is empty.
pub fn write_csv<T: Serialize>(writer: impl Write, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub const ESTIMATE_HEADER: &[&str] = &["time_s", "method", "scan_r", "x", "y", "z", "energy"];
pub const PHI_HEADER: &[&str] = &["time_s", "method", "source", "phi"];
pub const RMSE_HEADER: &[&str] = &[
    "geometry",
    "sources",
    "simulation",
    "seed",
    "rt60",
    "frames",
    "srp_rmse",
    "svd_rmse",
];
pub const SUMMARY_HEADER: &[&str] = &[
    "geometry",
    "sources",
    "srp_rmse",
    "svd_rmse",
    "improvement",
    "simulations",
];
