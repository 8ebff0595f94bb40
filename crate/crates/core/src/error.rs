use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("problem must have at least one objective")]
    NoObjectives,

    #[error("objective count mismatch: {smooth} smooth parts but {nonsmooth} nonsmooth terms")]
    ObjectiveCountMismatch { smooth: usize, nonsmooth: usize },

    #[error("invalid nonsmooth term: {0}")]
    InvalidNonsmooth(String),

    #[error("unsupported combination of nonsmooth terms: {0}")]
    UnsupportedCombination(String),

    #[error("invalid quadratic: {0}")]
    InvalidQuadratic(String),

    #[error("objective {index} has no Lipschitz bound for its gradient")]
    UnknownLipschitz { index: usize },

    #[error("analytic Lipschitz bound needs a quadratic objective (objective {index} is not)")]
    NotQuadratic { index: usize },

    #[error("invalid Lipschitz constant {0}")]
    InvalidLipschitz(f64),

    #[error("point is outside the domain of the nonsmooth terms")]
    Infeasible,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
