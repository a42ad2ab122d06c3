use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ValuationError};
use crate::scalar::Scalar;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident($inner:ty), $prefix:literal) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub $inner);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_newtype!(
    /// Identifier of a single training or test datum, unique within a run.
    PointId(u64),
    "p"
);
id_newtype!(
    /// Owner of one or more points, e.g. a patient with several scans.
    SubjectId(u64),
    "s"
);
id_newtype!(
    /// Institution holding the point.
    ClientId(u32),
    "client-"
);

/// Last-layer activation vector of a datum together with its labels and lineage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepFeature<T> {
    pub point_id: PointId,
    pub vector: Vec<T>,
    pub labels: Vec<u8>,
    pub subject_id: SubjectId,
    pub client_id: ClientId,
}

/// Raw-feature datum as produced by the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint<T> {
    pub point_id: PointId,
    pub subject_id: SubjectId,
    pub client_id: ClientId,
    pub features: Vec<T>,
    pub labels: Vec<u8>,
    /// Number of label entries inverted by label flipping (0 for clean data).
    #[serde(default)]
    pub flips: u32,
}

impl<T: Scalar> DeepFeature<T> {
    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }
}

impl<T> LabeledPoint<T> {
    /// Count of positive labels among `labels[1..]` (the condition labels).
    pub fn condition_count(&self) -> usize {
        self.labels.iter().skip(1).filter(|&&y| y == 1).count()
    }
}

/// Shape shared by every point of a valuation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Shape {
    pub dim: usize,
    pub n_labels: usize,
}

/// Checks that every feature has the dimensions of `shape` (or of the first
/// feature when `shape` is `None`), binary labels and no NaN coordinates.
pub(crate) fn check_features<T: Scalar>(
    what: &'static str,
    features: &[DeepFeature<T>],
    shape: Option<Shape>,
) -> Result<Shape> {
    let first = features.first().ok_or(ValuationError::Empty(what))?;
    let shape = shape.unwrap_or(Shape {
        dim: first.dim(),
        n_labels: first.n_labels(),
    });
    for f in features {
        if f.vector.len() != shape.dim {
            return Err(ValuationError::DimensionMismatch {
                point: f.point_id,
                expected: shape.dim,
                found: f.vector.len(),
            });
        }
        if f.labels.len() != shape.n_labels {
            return Err(ValuationError::LabelMismatch {
                point: f.point_id,
                expected: shape.n_labels,
                found: f.labels.len(),
            });
        }
        if f.labels.iter().any(|&y| y > 1) {
            return Err(ValuationError::NonBinaryLabel(f.point_id));
        }
        if f.vector.iter().any(|x| !x.is_valid()) {
            return Err(ValuationError::NotANumber(f.point_id));
        }
    }
    Ok(shape)
}
