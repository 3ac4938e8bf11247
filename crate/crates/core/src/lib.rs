//! Floquet–Bloch spectra, contour spectral projections and nonlinear
//! instability diagnostics for operators with 2π-periodic coefficients.

pub mod bloch;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod linalg;
pub mod operator;
pub mod projections;
pub mod selftest;
pub mod spectra;

pub use bloch::{bloch_transform, inverse_bloch, isometry_defect, BlochField};
pub use error::{Error, Result};
pub use grid::{Norms, SampledFunction, SpatialGrid};
pub use operator::{
    apply_operator, assemble_bloch_matrix, symbol_eval, BlochMatrix, CoefficientTerm,
    Nonlinearity, PeriodicCoefficient, PeriodicOperator,
};
pub use num_complex::Complex64;
