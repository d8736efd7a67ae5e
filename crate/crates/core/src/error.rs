use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("map error at {location}: {message}")]
    Map { location: String, message: String },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}, {intervals} intervals")]
    Quadrature {
        estimate: f64,
        error_bound: f64,
        intervals: usize,
    },

    #[error("deployment error: {0}")]
    Deployment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn map(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Map {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
