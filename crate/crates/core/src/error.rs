use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("an array needs at least two microphones, got {0}")]
    TooFewMicrophones(usize),
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("grid level {0} exceeds the maximum of {max}", max = crate::geometry::MAX_GRID_LEVEL)]
    GridLevelTooLarge(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("{what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("cannot build an index over an empty point set")]
    EmptyPointSet,
    #[error("steering matrix has no energy: microphones are coincident")]
    DegenerateGeometry,
    #[error("eigen solver did not converge")]
    NoConvergence,
    #[error("silent frame: observation projection has zero norm")]
    SilentFrame,
}
