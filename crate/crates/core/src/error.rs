use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    InvalidConfig(Vec<String>),

    #[error("numerical convergence failure: {0}")]
    Convergence(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::Domain(_) | Error::Unsupported(_) => 2,
            Error::Convergence(_) | Error::Resolution(_) => 3,
            Error::Io(_) | Error::Json(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
