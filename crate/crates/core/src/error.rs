use thiserror::Error;

/// Errors produced by fitting, testing and data ingestion.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WilksError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is singular or not positive definite (pivot {pivot} = {value:e})")]
    SingularMatrix { pivot: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("self-loop on node {node} (line {line})")]
    SelfLoop { line: usize, node: usize },

    #[error("negative comparison count on line {line}")]
    NegativeCount { line: usize },

    #[error("MLE nonexistent: {0}")]
    MleNonexistent(String),

    #[error("win digraph is not strongly connected; the Bradley-Terry MLE does not exist")]
    NotStronglyConnected,

    #[error("items {0} and {1} were never compared; every pair needs at least one comparison")]
    SparseDesign(usize, usize),

    #[error("invalid null hypothesis: {0}")]
    InvalidNull(String),

    #[error("negative likelihood ratio: full {full} < restricted {restricted}")]
    NegativeLrt { full: f64, restricted: f64 },

    #[error(
        "no chi-square approximation: the Bradley-Terry LRT under a fixed-dimensional specified null \
         has no chi-square limit; use the normal regime"
    )]
    NoChiSquareApprox,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
}

impl WilksError {
    /// Short machine-readable tag used in serialized error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            WilksError::Domain(_) => "Domain",
            WilksError::SingularMatrix { .. } => "SingularMatrix",
            WilksError::DimensionMismatch { .. } => "DimensionMismatch",
            WilksError::Parse { .. } => "ParseError",
            WilksError::SelfLoop { .. } => "SelfLoop",
            WilksError::NegativeCount { .. } => "NegativeCount",
            WilksError::MleNonexistent(_) => "MleNonexistent",
            WilksError::NotStronglyConnected => "NotStronglyConnected",
            WilksError::SparseDesign(..) => "SparseDesign",
            WilksError::InvalidNull(_) => "InvalidNull",
            WilksError::NegativeLrt { .. } => "NegativeLrt",
            WilksError::NoChiSquareApprox => "NoChiSquareApprox",
            WilksError::InvalidScenario(_) => "InvalidScenario",
            WilksError::InvalidTolerance(_) => "InvalidTolerance",
        }
    }

    /// True for errors meaning the estimator does not exist for the data at hand,
    /// as opposed to malformed input or a programming error.
    pub fn is_nonexistence(&self) -> bool {
        matches!(
            self,
            WilksError::MleNonexistent(_) | WilksError::NotStronglyConnected | WilksError::SparseDesign(..)
        )
    }
}

pub type Result<T> = std::result::Result<T, WilksError>;
