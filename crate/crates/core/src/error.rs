use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("stage solver failed to converge: {0}")]
    StageSolverFailure(String),

    #[error("linear solver failure: {0}")]
    LinearSolverFailure(String),

    #[error("numeric failure at iteration {iteration}: {message}")]
    NumericFailure { iteration: usize, message: String },

    #[error("point {point:?} at t = {t} lies outside the model domain")]
    OutOfDomain { point: Vec<f64>, t: f64 },

    #[error("step size underflow or step budget exhausted at t = {t} (problem is likely stiff)")]
    StiffnessFailure { t: f64 },

    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("periodicity metadata absent: {0}")]
    MetadataAbsent(String),

    #[error("collocation point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("step {step} at t = {t}: {source}")]
    AtStep {
        step: usize,
        t: f64,
        state: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("training failed on sub-domains {ids:?}")]
    SubdomainFailures { ids: Vec<usize>, errors: Vec<Error> },

    #[error("model file format: {0}")]
    Format(String),

    #[error("checksum mismatch: model file is corrupt or truncated")]
    Checksum,

    #[error("unsupported model file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors that stem from numerics rather than bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::StageSolverFailure(_)
            | Error::LinearSolverFailure(_)
            | Error::NumericFailure { .. }
            | Error::StiffnessFailure { .. }
            | Error::NewtonFailure { .. }
            | Error::OutOfDomain { .. }
            | Error::SubdomainFailures { .. } => true,
            Error::AtPoint { source, .. } | Error::AtStep { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
