use thiserror::Error;

use crate::types::PointId;

pub type Result<T> = std::result::Result<T, ValuationError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValuationError {
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("dimension mismatch for point {point}: expected {expected}, found {found}")]
    DimensionMismatch {
        point: PointId,
        expected: usize,
        found: usize,
    },
    #[error("label dimension mismatch for point {point}: expected {expected}, found {found}")]
    LabelMismatch {
        point: PointId,
        expected: usize,
        found: usize,
    },
    #[error("point {0} has a label outside {{0, 1}}")]
    NonBinaryLabel(PointId),
    #[error("point {0} contains a NaN coordinate")]
    NotANumber(PointId),
    #[error("duplicate point id {0}")]
    DuplicatePoint(PointId),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("coalition table has {missing} unset coalitions")]
    IncompleteTable { missing: usize },
    #[error("{n} players exceeds the exact enumeration cap of {cap}")]
    TooManyPlayers { n: usize, cap: usize },
    #[error("coalition mask {mask:#x} out of range for {n} players")]
    MaskOutOfRange { mask: usize, n: usize },
    #[error("raw values sum to {sum:e}, too close to zero to normalize")]
    DegenerateNormalization { sum: f64 },
    #[error("coalition AUROC {0} is outside [0, 1]")]
    AucOutOfRange(f64),
    #[error("point {0} has no group assignment")]
    MissingGroup(PointId),
    #[error("vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("zero-norm vector has no direction")]
    ZeroNorm,
}
