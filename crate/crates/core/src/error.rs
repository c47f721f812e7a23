use thiserror::Error;

/// Errors produced by the model routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unstable: {0}")]
    Unstable(String),
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("truncation overflow at t = {t}: boundary population {boundary_pop:.3e} exceeds {tol:.3e}")]
    TruncationOverflow { t: f64, boundary_pop: f64, tol: f64 },
    #[error("noise factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("unphysical covariance: smallest symplectic eigenvalue {0:.6}")]
    UnphysicalCovariance(f64),
    #[error("degenerate intensity: n_a = {n_a:.3e}, n_b = {n_b:.3e}")]
    DegenerateIntensity { n_a: f64, n_b: f64 },
    #[error("{0} requires the phase-averaged mode")]
    PhaseModeUnsupported(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
