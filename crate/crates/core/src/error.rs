use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate covariance: measured quadrature has covariance entry {value} (must be > 0)")]
    DegenerateCovariance { value: f64 },

    #[error("integration diverged at t = {time} s")]
    Divergence { time: f64 },

    #[error(
        "optically thick sample: absorption probability {epsilon} >= 1; \
         slice the gas and use the thick-gas scenario"
    )]
    OpticallyThick { epsilon: f64 },

    #[error("no interior minimum: decay rate is zero")]
    NoMinimum,

    #[error("configuration error: {0}")]
    Configuration(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }
}
