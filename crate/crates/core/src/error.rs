use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("lattice sum did not converge (residual {residual:.3e} after {shells} shells)")]
    LatticeSumConvergence { residual: f64, shells: usize },

    #[error("quadrature did not converge: estimated error {error:.3e} > tolerance {tolerance:.3e} ({detail})")]
    Quadrature {
        error: f64,
        tolerance: f64,
        detail: String,
    },

    #[error("T-matrix is singular: |L| = {0:.3e}")]
    SingularTMatrix(f64),

    #[error("empty on-shell contour at E = {0}")]
    EmptyContour(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported geometry: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
