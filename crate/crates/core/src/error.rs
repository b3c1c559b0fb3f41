use thiserror::Error;

pub type Result<T> = std::result::Result<T, TodaError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TodaError {
    /// A bond exponent left the range where `exp` is finite.
    #[error("bond exponent {exponent} at bond {bond} overflows")]
    Overflow { bond: usize, exponent: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input lies outside the domain of a map (ordering, positivity, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A result that should hold exactly could not be resolved at double precision.
    #[error("numerical resolution: {0}")]
    Resolution(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TodaError {
    fn from(err: std::io::Error) -> Self {
        TodaError::Io(err.to_string())
    }
}
