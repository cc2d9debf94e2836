use thiserror::Error;

/// Which half of the joint state a message refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Component::X => f.write_str("x"),
            Component::Y => f.write_str("y"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {component}: expected {expected}, found {found}")]
    DimensionMismatch {
        component: Component,
        expected: usize,
        found: usize,
    },

    #[error("non-finite draw for component {component}")]
    NonFinite { component: Component },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("replicate {replicate}: {source}")]
    AtReplicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no certificate: jm={jm}")]
    NoCertificate { jm: f64 },

    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_replicate(self, replicate: usize) -> Self {
        Error::AtReplicate {
            replicate,
            source: Box::new(self),
        }
    }

    /// True for argument-style failures (bad input, missing certificate)
    /// as opposed to runtime numeric failures.
    pub fn is_argument_error(&self) -> bool {
        match self {
            Error::InvalidArgument(_)
            | Error::NoCertificate { .. }
            | Error::PreconditionNotMet(_)
            | Error::DimensionMismatch { .. }
            | Error::Data(_) => true,
            Error::AtIteration { source, .. } | Error::AtReplicate { source, .. } => {
                source.is_argument_error()
            }
            _ => false,
        }
    }
}
