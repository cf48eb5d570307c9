use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("bisection bracket [{lo}, {hi}] does not contain a sign change")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("only an approximate value is available (best lower bound {lower_bound})")]
    ApproximateOnly { lower_bound: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("problem exceeds the enumeration cap: {0}")]
    ScaleCap(String),
}
