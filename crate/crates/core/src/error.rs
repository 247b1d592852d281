use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid parameters or a request the routine cannot honour.
    #[error("usage error: {0}")]
    Usage(String),

    /// An iterative or adaptive procedure did not reach its tolerance.
    #[error("numerical failure in {context}: {detail} (last residual {residual:e})")]
    NumericalFailure {
        context: String,
        detail: String,
        residual: f64,
    },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn numerical(context: &str, detail: impl Into<String>, residual: f64) -> Self {
        Error::NumericalFailure {
            context: context.to_string(),
            detail: detail.into(),
            residual,
        }
    }
}
