use thiserror::Error;

/// Errors raised by the library. Every variant carries a human-readable
/// message; [`Error::kind`] gives a stable machine-readable tag.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported design: {0}")]
    UnsupportedDesign(String),
    #[error("not a valid moment vector: {0}")]
    NotAValidMoment(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("undefined posterior: {0}")]
    UndefinedPosterior(String),
    #[error("enumeration too large: {0}")]
    TooLarge(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::UnsupportedDesign(_) => "unsupported-design",
            Error::NotAValidMoment(_) => "not-a-valid-moment",
            Error::SolverFailure(_) => "solver-failure",
            Error::UndefinedPosterior(_) => "undefined-posterior",
            Error::TooLarge(_) => "too-large",
            Error::Inconsistent(_) => "inconsistent",
        }
    }

    /// Same kind with `context: ` prepended to the message.
    pub fn context(self, context: impl std::fmt::Display) -> Self {
        let wrap = |m: String| format!("{context}: {m}");
        match self {
            Error::InvalidInput(m) => Error::InvalidInput(wrap(m)),
            Error::UnsupportedDesign(m) => Error::UnsupportedDesign(wrap(m)),
            Error::NotAValidMoment(m) => Error::NotAValidMoment(wrap(m)),
            Error::SolverFailure(m) => Error::SolverFailure(wrap(m)),
            Error::UndefinedPosterior(m) => Error::UndefinedPosterior(wrap(m)),
            Error::TooLarge(m) => Error::TooLarge(wrap(m)),
            Error::Inconsistent(m) => Error::Inconsistent(wrap(m)),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)*) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($arg)*)));
        }
    };
}
pub(crate) use ensure;
