use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid alternative set: {0}")]
    InvalidAlternatives(String),
    #[error("unknown alternative `{0}`")]
    UnknownAlternative(String),
    #[error("invalid outcome grid: {0}")]
    InvalidGrid(String),
    #[error("choice set {mask:#b} is malformed: {reason}")]
    InvalidChoiceSet { mask: u32, reason: String },
    #[error("choice over an empty set")]
    EmptyChoiceSet,
    #[error("latent index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("latent point does not belong to this space: {0}")]
    InvalidPoint(String),
    #[error("restriction `{0}` already present")]
    DuplicateRestriction(String),
    #[error("cannot parse restriction `{input}`: {reason}")]
    RestrictionSyntax { input: String, reason: String },
    #[error("restriction sets are not nested: {0}")]
    NonNested(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no observations in arm z={0}")]
    EmptyArm(u8),
    #[error("degenerate discretization grid: {0}")]
    DegenerateGrid(String),
    #[error("outcome {0} is not on the grid")]
    OffGrid(f64),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("model is infeasible (minimum total violation {violation:.3e})")]
    Infeasible { violation: f64 },
    #[error("denominator lower bound {lower:.3e} is not positive")]
    DenominatorNotPositive { lower: f64 },
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("parameter `{0}` is linear-fractional; only linear parameters support inference")]
    LinearOnly(String),
    #[error("tightened set is empty for every tried tau")]
    EmptyTightenedSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::InvalidData(e.to_string())
    }
}
