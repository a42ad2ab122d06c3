//! Valuation mathematics for decentralized data point valuation.
//!
//! The routines here are generic over [`Scalar`] so that the same recursion
//! can run in `f64` for production use and in exact rational arithmetic
//! ([`Rational`]) when a test needs an exact answer.

pub mod ending;
pub mod error;
pub mod knn;
pub mod normalize;
pub mod report;
pub mod scalar;
pub mod shapley;
pub mod similarity;
pub mod types;

pub use ending::plateau_reached;
pub use error::{Result, ValuationError};
pub use knn::{compute_knn_svs, knn_svs_dense, knn_utility, DEFAULT_K};
pub use normalize::{aggregate_group, normalize_to_auc, NORMALIZATION_EPSILON};
pub use report::{value_data_points, Grouping, PointLineage, ValuationReport};
pub use scalar::{Real, Scalar};
pub use shapley::{canonical_shapley, CoalitionTable, MAX_PLAYERS};
pub use similarity::cosine_similarity;
pub use types::{ClientId, DeepFeature, LabeledPoint, PointId, SubjectId};

/// Exact rational scalar used by oracle-style computations.
pub type Rational = num_rational::Ratio<i64>;

/// Wide exact rational scalar for games with larger denominators.
pub type WideRational = num_rational::Ratio<i128>;

/// Deep feature with the default double-precision scalar.
pub type Feature = DeepFeature<f64>;

/// Labeled raw-feature point with the default double-precision scalar.
pub type Point = LabeledPoint<f64>;

/// Coalition table over double-precision utilities.
pub type Table = CoalitionTable<f64>;
