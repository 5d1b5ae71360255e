//! Azimuth traces for linear arrays, one row per estimate.

use std::io::{Read, Write};

use multiloc_core::eval::{azimuth, GeometryClass};
use multiloc_core::{MicArray, Vec3};
use serde::Serialize;

use crate::output::EstimateRow;
use crate::{Error, Result};

/// A ground-truth line: either a direction or an azimuth already in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truth {
    Direction(Vec3),
    Azimuth(f64),
}

impl Truth {
    /// Parses `a` (azimuth) or `x,y,z` (direction).
    pub fn parse(text: &str) -> Result<Self> {
        let values: Vec<f64> = text
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::Config(format!("bad truth '{text}'")))?;
        match values[..] {
            [a] => Ok(Self::Azimuth(a)),
            [x, y, z] => Ok(Self::Direction([x, y, z])),
            _ => Err(Error::Config(format!(
                "truth '{text}' must be an azimuth or x,y,z"
            ))),
        }
    }

    pub fn azimuth(self) -> f64 {
        match self {
            Self::Azimuth(a) => a,
            Self::Direction(d) => azimuth(&d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct PlotRow {
    time_s: f64,
    method: String,
    scan_r: usize,
    azimuth: f64,
}

/// Reads an estimates CSV and writes `time_s, method, scan_r, azimuth, truth_1..truth_T`.
pub fn plot_data(
    estimates: impl Read,
    out: impl Write,
    array: &MicArray,
    truths: &[Truth],
) -> Result<usize> {
    if GeometryClass::of(array) != GeometryClass::Linear {
        return Err(Error::Config(format!(
            "azimuth traces need a linear array, '{}' is {}",
            array.name(),
            GeometryClass::of(array)
        )));
    }
    let mut reader = csv::Reader::from_reader(estimates);
    let rows: Vec<EstimateRow> = reader.deserialize().collect::<Result<_, _>>()?;
    let mut header = vec![
        "time_s".to_string(),
        "method".into(),
        "scan_r".into(),
        "azimuth".into(),
    ];
    header.extend((1..=truths.len()).map(|t| format!("truth_{t}")));
    let truth_values: Vec<String> = truths.iter().map(|t| t.azimuth().to_string()).collect();

    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for r in &rows {
        let plot = PlotRow {
            time_s: r.time_s,
            method: r.method.clone(),
            scan_r: r.scan_r,
            azimuth: azimuth(&[r.x, r.y, r.z]),
        };
        let mut record = vec![
            plot.time_s.to_string(),
            plot.method,
            plot.scan_r.to_string(),
            plot.azimuth.to_string(),
        ];
        record.extend(truth_values.iter().cloned());
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(rows.len())
}
