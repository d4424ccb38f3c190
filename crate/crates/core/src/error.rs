use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NotConverged { sweeps: usize, off_norm: f64 },

    #[error("state is not full rank: smallest eigenvalue {min_eigenvalue:e}")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("matrix is singular or numerically singular (condition number {condition:e})")]
    Singular { condition: f64 },

    #[error("spanning operators are linearly dependent in the SLD metric (smallest Gram eigenvalue {min_eigenvalue:e})")]
    LinearDependence { min_eigenvalue: f64 },

    #[error("parameter {theta:?} is outside the model domain: {reason}")]
    Domain { theta: Vec<f64>, reason: String },

    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("regularity conditions fail at {theta:?}: {failures}")]
    Regularity { theta: Vec<f64>, failures: String },

    #[error("invalid weight matrix: {0}")]
    InvalidWeight(String),

    #[error("empty parameter grid")]
    EmptyGrid,

    #[error("grid point {theta:?}: {source}")]
    GridPoint {
        theta: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors that stem from the model failing regularity at some point
    /// (including positivity/domain problems) rather than from malformed input.
    pub fn is_regularity_failure(&self) -> bool {
        match self {
            Error::Regularity { .. } | Error::RankDeficient { .. } | Error::Domain { .. } => true,
            Error::Singular { .. } | Error::LinearDependence { .. } => true,
            Error::GridPoint { source, .. } => source.is_regularity_failure(),
            _ => false,
        }
    }
}
