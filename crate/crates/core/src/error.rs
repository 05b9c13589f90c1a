use thiserror::Error;

use crate::bounds::Estimand;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("zero conditioning mass: {0}")]
    ZeroConditioningMass(String),

    #[error("positivity violation: {0}")]
    PositivityViolation(String),

    #[error("codebook has no {0} variable")]
    MissingRole(&'static str),

    #[error("invalid cardinalities: {0}")]
    InvalidCardinalities(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("empty intersection: max lower {lower} exceeds min upper {upper}")]
    EmptyIntersection { lower: f64, upper: f64 },

    #[error("missing component interval for {0}")]
    MissingComponent(Estimand),

    #[error("bootstrap replicate {replicate} failed after {attempts} attempts: {last}")]
    ReplicateFailed {
        replicate: usize,
        attempts: usize,
        last: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the estimator's preconditions on the data
    /// (as opposed to configuration or I/O problems).
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::ZeroConditioningMass(_)
                | Error::PositivityViolation(_)
                | Error::EmptyIntersection { .. }
                | Error::MissingComponent(_)
                | Error::ReplicateFailed { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
