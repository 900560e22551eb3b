use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column {0} has zero norm")]
    ZeroColumn(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("iterative solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("support is empty")]
    EmptySupport,
    #[error("problem has no ground truth")]
    MissingGroundTruth,
    #[error("degenerate step size: {0}")]
    DegenerateStep(String),
    #[error("observation vector is zero")]
    ZeroObservation,
    #[error("vector has zero mass")]
    ZeroMass,
    #[error("{count} supports exceed the enumeration cap of {cap}")]
    TooLarge { count: u128, cap: u128 },
    #[error("restricted isometry constant delta_k = {0} is not below 1")]
    DegenerateRip(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by user input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Parse(_)
                | Error::InvalidArgument(_)
                | Error::DimensionMismatch(_)
                | Error::Json(_)
                | Error::Io(_)
                | Error::MissingGroundTruth
        )
    }
}
