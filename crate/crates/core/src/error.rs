use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no member of the domain found after {attempts} attempts")]
    DomainEmpty { attempts: usize },

    #[error("covariance matrix not positive definite (jitter reached {jitter:e})")]
    IllConditioned { jitter: f64 },

    #[error("hyperparameter fit failed: {0}")]
    Fit(String),

    #[error("objective returned a non-finite value {value} at evaluation {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
