use crate::Complex;

/// Failure modes shared by every module.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// The Gamma function was evaluated at one of its poles.
    #[error("Gamma function pole at z = {0}")]
    GammaPole(i64),
    /// The transmission amplitude was evaluated on top of one of its poles.
    #[error("transmission amplitude evaluated at its pole k = {0}")]
    AtPole(Complex),
    /// Input outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical procedure failed to reach its tolerance.
    #[error("numerical failure in {module}: {message}")]
    Numerical { module: &'static str, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Numerical { module, message: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
