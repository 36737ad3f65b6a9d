use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("prime table exhausted: argument needs limit >= {required}, table limit is {limit}")]
    TableExhausted { required: u64, limit: u64 },

    #[error("resource limit: {0}")]
    Resource(String),

    /// A truncation or tail bound could not be brought under the requested
    /// tolerance.
    #[error("precision: {message} (achieved bound {achieved:e})")]
    Precision { message: String, achieved: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable code, used by the CLI error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Contract(_) => "contract",
            Error::TableExhausted { .. } => "table_exhausted",
            Error::Resource(_) => "resource",
            Error::Precision { .. } => "precision",
            Error::Numeric(_) => "numeric",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}
