//! Network construction and checking utilities, and the shipped example models.

mod discretize;
pub mod models;
mod validate;

use thiserror::Error;

pub use discretize::{equal_frequency_discretize, parse_schemes, write_schemes, IntervalScheme};
pub use validate::{validate_document, validate_network, Finding, ValidationReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelToolsError {
    #[error("need at least 2 bins, got {0}")]
    TooFewBins(usize),

    #[error("too few distinct values: {distinct} distinct for {bins} bins")]
    TooFewDistinct { distinct: usize, bins: usize },

    #[error("values must be finite")]
    NonFinite,

    #[error("interval scheme `{variable}`: {message}")]
    InvalidScheme { variable: String, message: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
