use thiserror::Error;

/// Errors produced across the toolbox.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("not Hermitian: asymmetry {asym:.3e} exceeds tolerance")]
    NotHermitian { asym: f64 },

    #[error("not positive semidefinite: min eigenvalue {min_eig:.3e}")]
    NotPsd { min_eig: f64 },

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("enumeration guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::DimMismatch(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArg(msg.into())
    }
}
