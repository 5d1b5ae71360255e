//! Command-line tooling around `multiloc-core`: array and model files, WAV
//! IO, room simulation, evaluation campaigns and benchmarks.

pub mod array_file;
pub mod bench;
pub mod campaign;
pub mod config;
pub mod error;
pub mod model_file;
pub mod output;
pub mod pipeline;
pub mod plot;
pub mod sim;
pub mod wav;

pub use error::{Error, Result};
pub use multiloc_core as core;
