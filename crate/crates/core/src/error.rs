use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants carry the measured quantity that triggered them so callers can
/// report how far from admissible an input was.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix dimension {0} is not even")]
    OddDimension(usize),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix L is singular (|det L| = {det:e})")]
    SingularL { det: f64 },

    #[error("matrix is not symplectic (max |SᵀJS − J| = {defect:e})")]
    NotSymplectic { defect: f64 },

    #[error("symplectic matrix is not free (|det B| = {det_b:e})")]
    NotFree { det_b: f64 },

    #[error("S − I is singular (|det(S − I)| = {det:e})")]
    SingularSminusI { det: f64 },

    #[error("M − J/2 is singular (|det| = {det:e})")]
    SingularMminusHalfJ { det: f64 },

    #[error("symmetric matrix is degenerate (eigenvalue {eigenvalue:e} within tolerance of zero)")]
    DegenerateMatrix { eigenvalue: f64 },

    #[error("branch {branch} has the wrong parity for det L = {det:e}")]
    ParityMismatch { branch: i64, det: f64 },

    #[error("sample leaves the grid where the function is not negligible: {0}")]
    OutOfDomain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample value at index {0}")]
    NonFinite(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("truncation error estimate {estimate:e} exceeds tolerance {tol:e}")]
    TruncationError { estimate: f64, tol: f64 },

    #[error("no λ-shift gave both |det(S_W − I)| above threshold (best min determinant {best:e})")]
    FactorizationFailed { best: f64 },

    #[error("quadratic phase is degenerate (smallest |eigenvalue| {eigenvalue:e})")]
    DegeneratePhase { eigenvalue: f64 },

    #[error("rotation angle {0} is a multiple of π")]
    SingularAngle(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
