//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("validation: {0}")]
    Validation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(
        "certification failed after {attempts} refinements: sup error {achieved:.3e} > target {target:.3e}"
    )]
    Certification {
        attempts: usize,
        achieved: f64,
        target: f64,
    },

    #[error("planning: required {required} shots exceeds ceiling {ceiling}")]
    ShotCeiling { required: u128, ceiling: u64 },

    #[error(
        "degenerate normalization: estimated q^2 = {q_squared:.3e} <= 0 after {shots} shots; \
         rerun with a larger norm-subroutine shot budget"
    )]
    DegenerateNormalization { q_squared: f64, shots: u64 },

    #[error("construction: {0}")]
    Construction(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
