use thiserror::Error;

/// Errors raised by the laboratory.
///
/// The variants split into two families that the command line maps to
/// different exit codes: caller mistakes (`Domain`, `Precondition`,
/// `Parameter`, `Parse`, `Io`) and numerical breakdowns (`Evaluation`,
/// `Numerical`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside the domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("integrand is not finite at s = {s:e} (log-depth {depth}): value {value}")]
    Evaluation { s: f64, depth: f64, value: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// `true` for errors caused by invalid input rather than numerical breakdown.
    pub fn is_caller_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Precondition(_)
                | Error::Parameter(_)
                | Error::Parse(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}

pub(crate) fn parameter<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
