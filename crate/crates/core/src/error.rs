//! Crate error type.

use thiserror::Error;

/// Errors reported by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter is outside its admissible domain.
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// Geometry is inconsistent (grid spacing, masks, breakpoints).
    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// Breakpoints of a split integral are out of order or out of range.
    #[error("breakpoint order violation: {0}")]
    BreakpointOrder(String),

    /// An iterative solver hit its iteration cap before reaching tolerance.
    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    /// A discretization produced an untrustworthy result.
    #[error("discretization failure: {0}")]
    Discretization(String),

    /// A measure violates an invariant (negative mass, unsupported layout).
    #[error("invalid measure: {0}")]
    Measure(String),

    /// A requested operation needs a precondition that does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Malformed experiment configuration or input file.
    #[error("config error: {0}")]
    Config(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for the CLI: config errors exit 3, solver
    /// non-convergence exits 2, everything else exits 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 3,
            Error::NonConvergence(_) => 2,
            _ => 1,
        }
    }
}
