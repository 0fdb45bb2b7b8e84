//! Error type shared by all core modules.

use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Shape or dimensionality disagreement between operands.
    Dim(String),
    /// Invalid configuration value (violated invariant).
    Config(String),
    /// Malformed or insufficient input data.
    Data(String),
    /// Empty batch where at least one element is required.
    Batch(String),
    /// Non-finite value produced where a finite one is required.
    Numeric(String),
    /// Operation called in a state it does not support.
    State(String),
    /// Feature dimension with zero variance; cannot standardize.
    DegenerateStats(usize),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dim(m) => write!(f, "dimension error: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Data(m) => write!(f, "data error: {m}"),
            Error::Batch(m) => write!(f, "batch error: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
            Error::State(m) => write!(f, "state error: {m}"),
            Error::DegenerateStats(d) => {
                write!(f, "degenerate stats: zero variance in dimension {d}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
