//! Multi-source sound source localization over arbitrary microphone arrays.
//!
//! Two localizers share one spectral front end:
//!
//! * [`srp`]: discrete SRP-PHAT, evaluating GCC-PHAT at rounded TDOAs and
//!   nulling lag regions between scans.
//! * [`svd`]: SVD-PHAT, projecting the observation onto a low-rank subspace
//!   of the steering matrix, searching the dictionary with a k-d tree and
//!   deflating found directions with Gram-Schmidt.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![warn(missing_debug_implementations)]
// float methods resolve to std inherents in unit-test builds
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod eval;
pub mod fft;
pub mod geometry;
pub mod kdtree;
mod lowrank;
pub mod scan;
pub mod spectral;
pub mod srp;
pub mod svd;

pub use error::{Error, Result};
pub use geometry::{DoaGrid, MicArray, NeighborSets, NullRangeTable, TdoaTable, Vec3};
pub use kdtree::NnIndex;
pub use lowrank::{truncated_hermitian_eigen, TruncatedEigen};
pub use scan::{Estimate, ScanResult};
pub use spectral::{CrossSpectrumState, PhatVector, StftConfig};
pub use srp::{GccTensor, SrpPhat};
pub use svd::{DeflationState, SvdPhatModel};

pub use num_complex::Complex64;
