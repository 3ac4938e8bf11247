use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("truncation M = {truncation} is below the coefficient bandwidth {bandwidth}")]
    Truncation { truncation: usize, bandwidth: usize },

    #[error("unsupported oracle: {0}")]
    UnsupportedOracle(String),

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("eigensolver failed at xi = {xi}")]
    Eigensolver { xi: f64 },

    #[error("contour passes within {distance:e} of eigenvalue {eigenvalue} (node zeta = {zeta})")]
    Contour {
        zeta: Complex64,
        eigenvalue: Complex64,
        distance: f64,
    },

    #[error("growth overflow: norm {norm:e} exceeds cap at t = {time}")]
    GrowthOverflow { norm: f64, time: f64 },

    #[error("non-finite value encountered at t = {time}")]
    NonFinite { time: f64 },

    #[error("diagnostics: {0}")]
    Diagnostics(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("degenerate eigenvector continuation at xi = {xi} (overlap {overlap:e})")]
    DegenerateContinuation { xi: f64, overlap: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
