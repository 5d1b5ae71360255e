use alloc::vec::Vec;

use crate::Vec3;

/// One scan's pick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    /// Grid index of the direction.
    pub q: usize,
    pub doa: Vec3,
    pub energy: f64,
    /// Set when the direction was already spanned by earlier scans and
    /// deflation left the observation unchanged.
    pub duplicate: bool,
}

/// Estimates in scan order. Empty for silent frames.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanResult {
    pub estimates: Vec<Estimate>,
}

impl ScanResult {
    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub fn doas(&self) -> impl Iterator<Item = &Vec3> {
        self.estimates.iter().map(|e| &e.doa)
    }
}

/// Index of the largest value, lowest index on ties. `None` for an empty slice.
pub(crate) fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
