use thiserror::Error;

/// Errors raised by the circular goodness-of-fit library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mean direction is undefined: resultant length {resultant:e} is below tolerance")]
    DegenerateDirection { resultant: f64 },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("optimizer did not converge from any start (best objective {best_objective}, gradient norm {gradient_norm:e})")]
    NonConvergence {
        best_objective: f64,
        gradient_norm: f64,
        best: Box<crate::param::ParametricModel>,
    },

    #[error("no data points carry kernel weight at the evaluation point")]
    EmptyNeighborhood,

    #[error("local design matrix is singular even after ridge rescue")]
    SingularDesign,

    #[error("statistic unreliable: {excluded} of {weighted} weighted grid points excluded")]
    UnreliableStatistic { excluded: usize, weighted: usize },

    #[error("{failed} of {total} bootstrap replicates failed (last error: {last_error})")]
    TooManyFailedReplicates {
        failed: usize,
        total: usize,
        last_error: String,
    },

    #[error("covariance matrix is not positive definite after jitter")]
    NotPositiveDefinite,

    #[error("MCMC chain failure: {0}")]
    ChainFailure(String),

    #[error("argument outside function domain: {0}")]
    Domain(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        Error::Parse {
            line,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl Error {
    /// Copy of the error; variants holding non-cloneable data keep only
    /// their message.
    pub(crate) fn clone_msg(&self) -> Error {
        match self {
            Error::EmptyNeighborhood => Error::EmptyNeighborhood,
            Error::SingularDesign => Error::SingularDesign,
            Error::UnreliableStatistic { excluded, weighted } => Error::UnreliableStatistic {
                excluded: *excluded,
                weighted: *weighted,
            },
            Error::TooManyFailedReplicates {
                failed,
                total,
                last_error,
            } => Error::TooManyFailedReplicates {
                failed: *failed,
                total: *total,
                last_error: last_error.clone(),
            },
            other => Error::InvalidArgument(other.to_string()),
        }
    }
}
