use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} is not stochastic: entries sum to {sum}")]
    NonStochastic { what: String, sum: f64 },

    #[error("{what} has a negative entry {value}")]
    NegativeEntry { what: String, value: f64 },

    #[error("{what} has a non-finite entry")]
    NonFinite { what: String },

    #[error("{what} = {value} is outside 1..={max}")]
    SizeOutOfRange { what: String, value: i64, max: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a probability distribution: {0}")]
    NotADistribution(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("no convergence after {iterations} iterations (gap {gap:e})")]
    ConvergenceFailure { iterations: usize, gap: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("query {query} outside envelope range [{lo}, {hi}]")]
    QueryOutOfRange { query: f64, lo: f64, hi: f64 },

    #[error("instance too large for brute force: {0}")]
    TooLarge(String),

    #[error("channel is not a modulo-additive channel")]
    NotModAdditive,

    #[error("help rate {rh} is below H(S) = {entropy}")]
    RhTooSmall { rh: f64, entropy: f64 },

    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("simulation too large: {0}")]
    ConfigTooLarge(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
