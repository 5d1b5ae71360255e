//! Microphone array definitions: built-in presets or JSON files.
//!
//! ```json
//! { "name": "my-array", "unit": "cm", "positions": [[0, 0, 0], [5, 0, 0]] }
//! ```

use std::fs;
use std::path::Path;

use multiloc_core::MicArray;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Cm,
    M,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayFile {
    pub name: String,
    pub unit: Unit,
    pub positions: Vec<[f64; 3]>,
}

impl ArrayFile {
    pub fn to_array(&self) -> Result<MicArray> {
        let array = match self.unit {
            Unit::Cm => MicArray::from_centimeters(self.name.clone(), &self.positions)?,
            Unit::M => MicArray::new(self.name.clone(), self.positions.clone())?,
        };
        Ok(array)
    }

    pub fn from_array(array: &MicArray) -> Self {
        Self {
            name: array.name().to_string(),
            unit: Unit::M,
            positions: array.positions().to_vec(),
        }
    }
}

pub const PRESETS: [&str; 3] = ["linear7", "planar7", "spatial7"];

/// A preset name or a path to an array JSON file.
pub fn resolve_geometry(spec: &str) -> Result<MicArray> {
    if let Some(array) = MicArray::preset(spec) {
        return Ok(array);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Config(format!(
            "unknown geometry `{spec}`: expected one of {PRESETS:?} or an array JSON file"
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ArrayFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    file.to_array()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centimeter_file_matches_preset() {
        let json = r#"{"name":"planar7","unit":"cm","positions":[[0,0,0],[5,0,0],[2.5,4.3,0],[-2.5,4.3,0],[-5,0,0],[-2.5,-4.3,0],[2.5,-4.3,0]]}"#;
        let file: ArrayFile = serde_json::from_str(json).unwrap();
        assert_eq!(file.to_array().unwrap(), MicArray::planar7());
    }

    #[test]
    fn unknown_geometry_is_a_config_error() {
        let err = resolve_geometry("no-such-array").unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        let file = ArrayFile::from_array(&MicArray::spatial7());
        fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        let back = resolve_geometry(path.to_str().unwrap()).unwrap();
        assert_eq!(back, MicArray::spatial7());
    }
}
