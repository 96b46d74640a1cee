use thiserror::Error;

use crate::matrix::MatrixError;
use crate::transport::{Role, TransportError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("session {session}: masked matrix is singular, inversion aborted ({source})")]
    SingularInput {
        session: u64,
        #[source]
        source: MatrixError,
    },
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("{role} failed: {source}")]
    Party {
        role: Role,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips party wrappers down to the underlying failure.
    pub fn root(&self) -> &Error {
        match self {
            Error::Party { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures caused by another party aborting the session.
    pub fn is_abort(&self) -> bool {
        matches!(self.root(), Error::Transport(TransportError::Aborted { .. }))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
