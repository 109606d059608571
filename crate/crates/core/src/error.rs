use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state outside the dynamical domain: {0}")]
    Domain(String),

    #[error("polar equations of motion are singular at e = 0")]
    Singularity,

    #[error("integration step budget exhausted at t = {t}")]
    StepBudget { t: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("value {value} on axis {axis} lies outside the bin range")]
    OutOfRange { axis: usize, value: f64 },

    #[error("split library failed quality checks (L2 = {l2:e}): {reason}")]
    LibraryQuality { l2: f64, reason: String },

    #[error("invalid unscented scaling: Nvar + zeta = {0}")]
    InvalidScaling(f64),

    #[error("propagation failed: {0}")]
    Propagation(String),

    #[error("{failed} of {total} trajectories failed (first indices: {indices:?})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        indices: Vec<usize>,
    },

    #[error("geometry failure at t = {t}: {source}")]
    Geometry {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported phase portrait: {0}")]
    UnsupportedPortrait(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
