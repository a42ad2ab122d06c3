//! Synthetic stand-in for multi-source, multi-label imaging data.
//!
//! Points are drawn per *source* (think: one hospital dataset each). Every
//! source shifts the feature mean and the condition prevalence. In IID mode
//! each client draws its subjects from a uniform mixture of sources; in
//! non-IID mode client `c` draws only from source `c`.
//!
//! Label 0 is the "finding" indicator and is set whenever any condition label
//! `1..L` is set; it can also be set alone (an unspecified finding).

mod config;
mod csvio;
mod flip;
mod generate;
mod partition;

use thiserror::Error;

pub use config::{DistributionMode, SynthConfig};
pub use csvio::{read_points_csv, write_points_csv};
pub use flip::{flip_labels, linear_flip_fractions};
pub use generate::{gen_synthetic, SyntheticData, TEST_CLIENT};
pub use partition::partition;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("noise standard deviation {0} gives a degenerate covariance")]
    DegenerateCovariance(f64),
    #[error("flip fraction {0} outside [0, 1]")]
    InvalidFraction(f64),
    #[error("{subjects} subjects cannot fill {clients} clients")]
    TooFewSubjects { subjects: usize, clients: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed dataset row: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, SynthError>;
