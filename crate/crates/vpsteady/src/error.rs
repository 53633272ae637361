//! Error taxonomy shared by the whole crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An Lp exponent fell outside its admissible window.
    #[error("exponent out of range: {0}")]
    ExponentOutOfRange(String),

    /// A density with zero total mass, for which the amplitude is undefined.
    #[error("degenerate density: total mass is zero")]
    DegenerateDensity,

    /// The fixed-point iteration produced a degenerate (zero-mass) iterate.
    #[error("iteration collapsed at step {iteration}: {source}")]
    IterationCollapsed {
        iteration: usize,
        source: Box<Error>,
    },

    /// The Lane-Emden integration ran past the cutoff radius without a zero.
    #[error("no zero of theta found before xi = {0}")]
    NoZeroFound(f64),

    /// Two profiles that must share a discretization do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// File content that does not parse as the expected format.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
