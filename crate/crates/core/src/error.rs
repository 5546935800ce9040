use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point is not in the open simplex: {0}")]
    OffSimplex(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("row {row} has non-positive sum {sum}")]
    ZeroSumRow { row: usize, sum: f64 },

    #[error("decision variable {index} = {value} is outside [0, 1]")]
    OutOfBox { index: usize, value: f64 },

    #[error("non-finite value at optimizer step {step}")]
    NonFiniteGradient { step: u64 },

    #[error("non-finite loss at epoch {epoch}: {detail}")]
    NonFiniteLoss { epoch: usize, detail: String },

    #[error("hypervolume is only implemented for 2 or 3 objectives, got {0}")]
    UnsupportedObjectives(usize),

    #[error("checkpoint format: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
