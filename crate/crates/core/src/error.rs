use crate::dist::ParameterSet;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error(
        "truncation too deep at standardized point {standardized}: conditional mass underflows"
    )]
    TailUnderflow { standardized: f64 },

    #[error("numeric range exceeded: {0}")]
    NumericRange(String),

    #[error("empty sample")]
    EmptySample,

    #[error("observed count {observed} exceeds total count {total}")]
    Count { observed: usize, total: usize },

    #[error("invalid sample: {}", .0.join("; "))]
    InvalidSample(Vec<String>),

    #[error("no uncensored observations: likelihood unbounded; estimation refused")]
    NoUncensored,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("{algorithm} is not available for the {family} family: {reason}")]
    Unsupported {
        algorithm: String,
        family: String,
        reason: String,
    },

    #[error("optimizer did not converge from any start; best point {best:?} (loglik {loglik})")]
    NonConvergence { best: ParameterSet, loglik: f64 },

    #[error("mismatched family: expected {expected}, got {got}")]
    FamilyMismatch { expected: String, got: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
