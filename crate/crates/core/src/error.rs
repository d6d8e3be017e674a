use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the library.
///
/// Poles of m-functions are *not* errors; they are reported through
/// [`crate::mfunction::MValue`] and the block analogue, since point masses
/// and continuation poles are legitimate data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no roots defined for a polynomial of degree {0}")]
    NoRootsDefined(isize),

    #[error("coupling must be positive (got {0})")]
    CouplingNotPositive(f64),

    #[error("not a discriminant of a periodic Jacobi matrix: {0}")]
    NotADiscriminant(String),

    #[error("branch labels undefined at critical value {0}")]
    CriticalValue(Complex64),

    #[error("window too small: need at least {need}, got {got}")]
    WindowTooSmall { need: usize, got: usize },

    #[error("singular block A_{0}")]
    SingularBlock(usize),

    #[error("polynomial degree/period mismatch: off-band residual {0:.3e}")]
    PeriodMismatch(f64),

    #[error("edge: density definition degenerate (x = {0} is within tolerance of a band edge)")]
    EdgeDegenerate(f64),

    #[error("order estimation unreliable: {0}")]
    OrderEstimation(String),

    #[error("coefficient index {0} lies beyond the truncated operator")]
    BeyondTruncation(usize),

    #[error("eventually periodic operator required: {0}")]
    NotEventuallyPeriodic(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
