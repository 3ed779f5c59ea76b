use thiserror::Error;

/// Errors raised by the identification, asymptotics and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("hyper-parameter {index} = {value} lies outside [{lo}, {hi}]")]
    OutOfBox {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("regression matrix is rank deficient (cond(Phi^T Phi) = {cond:e})")]
    RankDeficient { cond: f64 },

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("Hessian A_b is singular; pseudo-inverse was applied")]
    SingularA,

    #[error("true coefficients are constant; Fit_g is undefined")]
    DegenerateTruth,

    #[error("optimizer failed from every start")]
    NoConvergence,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
