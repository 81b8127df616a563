use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has no entries")]
    EmptyMatrix,

    #[error("matrix contains non-finite entries")]
    NonFiniteInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("signal alignment infeasible: {0}")]
    InfeasibleAlignment(String),

    #[error("relay precoder system has no free variables: {0}")]
    InfeasibleDimension(String),

    #[error("rank certification failed after {attempts} attempts at stage {stage}")]
    DegenerateInstance { stage: &'static str, attempts: usize },

    #[error("region classification requires K >= 2 (got K = {0})")]
    UnsupportedRegion(u32),

    #[error("target total DoF {target} exceeds the 3M/2 user-antenna limit {limit}")]
    UnreachableTarget { target: f64, limit: f64 },

    #[error("design failed verification: {0}")]
    Unverified(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
