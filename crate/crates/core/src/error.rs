use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode the library reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma has a pole at x = {x}")]
    Pole { x: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature did not converge: error estimate {error_estimate:e} above tolerance {tol:e} after {panels} panels"
    )]
    NonConvergence {
        panels: usize,
        error_estimate: f64,
        tol: f64,
    },

    #[error("path passes within {min_clearance:e} of the puncture (required clearance {clearance:e}){context}")]
    Puncture {
        min_clearance: f64,
        clearance: f64,
        context: String,
    },

    #[error("polygon is not closed: first and last vertex differ")]
    OpenLoop,

    #[error("accumulated angle {turns} turns is not an integer winding")]
    NonIntegerWinding { turns: f64 },

    #[error(
        "local exponentiation missed tolerance {tol:e}: isometry residual {isometry:e}, oracle residual {oracle:e}"
    )]
    Tolerance { isometry: f64, oracle: f64, tol: f64 },

    #[error("rank is ambiguous: relative singular value {ratio:e} lies in the forbidden band; refine the grid")]
    RankAmbiguity { ratio: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid scenario: {0}")]
    Scenario(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
