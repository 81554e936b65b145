use thiserror::Error;

/// Errors raised by the analytic and simulation layers.
///
/// The variants are grouped so that the batch runner can map them onto
/// stable exit codes: input problems, unmet mathematical preconditions and
/// numerical failures are kept apart.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The Lévy triplet or rate function is invalid or the required
    /// integral diverges for it.
    #[error("model error: {0}")]
    Model(String),

    /// A mathematical precondition (H0, H1, p > 0, ...) does not hold.
    #[error("precondition `{condition}` failed: {detail}")]
    Precondition { condition: String, detail: String },

    /// The model is valid but this operation does not support it.
    #[error("unsupported model: {0}")]
    Unsupported(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Internal consistency check failed (non-monotone clock, negative
    /// density beyond tolerance, ...).
    #[error("internal consistency error: {0}")]
    Consistency(String),

    /// Configuration did not match the schema.
    #[error("config error at `{path}`: {detail}")]
    Config { path: String, detail: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn precondition(condition: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Precondition {
            condition: condition.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
