//! Desk-scale experiment runner: value points under label noise, compare
//! client-valuation methods, measure scaling, and demo the ledger.

pub mod config;
pub mod experiments;
pub mod output;
pub mod stats;

pub use config::{parse_seeds, ExperimentConfig};
pub use stats::{growth_exponent, Summary};

/// JSON schema every `value` report conforms to.
pub const VALUE_REPORT_SCHEMA: &str = include_str!("../schema/value_report.schema.json");
