use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("trajectory needs at least 3 waypoints (T >= 2), got T = {0}")]
    TooShort(usize),

    #[error("trajectory has {rows} waypoints of dimension {dim}; expected {expected} values, got {got}")]
    Shape {
        rows: usize,
        dim: usize,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),

    #[error("kernel variant {0} requires sigma")]
    MissingSigma(&'static str),

    #[error("kernel variant {0} takes no sigma")]
    UnexpectedSigma(&'static str),

    #[error("RBF kernel with sigma = {sigma} is not numerically positive definite at size n = {n}")]
    NotPositiveDefinite { sigma: f64, n: usize },

    #[error("correction timepoint {t} is not interior to a trajectory with T = {horizon}")]
    EndpointCorrection { t: usize, horizon: usize },

    #[error("{what}: expected {expected}, got {got}")]
    Mismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("kernel diagonal entry at {0} is not positive; subsystem is singular")]
    Singular(usize),

    #[error("index {index} out of range 1..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("planner hit a non-finite cost at iteration {iteration} with weights {weights:?}")]
    PlannerDiverged { iteration: usize, weights: Vec<f64> },

    #[error("normalization denominator {0:e} is degenerate (straight line is already optimal)")]
    DegenerateNormalization(f64),

    #[error("environment generation for seed {seed} rejected {attempts} candidates")]
    GenerationExhausted { seed: u64, attempts: u32 },

    #[error("environment has no ground-truth weights")]
    NoGroundTruth,

    #[error("{0}")]
    Format(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
