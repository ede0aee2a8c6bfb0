//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible for the requested operation.
    #[error("{op}: dimension mismatch: {left} vs {right}")]
    DimMismatch {
        /// Operation that was attempted.
        op: &'static str,
        /// Shape of the left operand, formatted `rows x cols`.
        left: String,
        /// Shape of the right operand.
        right: String,
    },

    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A text input failed to parse.
    #[error("{path}:{line}: {msg}")]
    Parse {
        /// File being parsed.
        path: String,
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        msg: String,
    },

    /// Training produced a non-finite loss, usually a learning-rate blow-up.
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged {
        /// Epoch index (0-based) at which the loss left the finite range.
        epoch: usize,
    },

    /// The iterative eigensolver exhausted its budget.
    #[error(
        "eigensolver did not converge: residual {residual:.3e} after {subspace} basis vectors \
         (tolerance {tolerance:.1e})"
    )]
    EigenNoConvergence {
        /// Best residual achieved for the worst requested pair.
        residual: f64,
        /// Number of basis vectors built before giving up.
        subspace: usize,
        /// Residual tolerance that was requested.
        tolerance: f64,
    },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, lr: usize, lc: usize, rr: usize, rc: usize) -> Error {
        Error::DimMismatch {
            op,
            left: format!("{lr}x{lc}"),
            right: format!("{rr}x{rc}"),
        }
    }
}
