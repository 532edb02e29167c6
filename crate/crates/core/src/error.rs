use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("element {id} is not in a ground set of size {n}")]
    InstanceMismatch { id: u32, n: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("offline algorithm queried an infeasible set {0}")]
    InfeasibleQuery(String),

    #[error("horizon {horizon} does not satisfy T >= max(N, 2*sqrt(2)*N/delta) = {required:.3}")]
    PreconditionViolated { horizon: u64, required: f64 },

    #[error("horizon {horizon} too small: {reason}")]
    HorizonTooSmall { horizon: u64, reason: String },

    #[error(
        "horizon {horizon} exhausted during exploration after {played} rounds; use the small-horizon m adjustment"
    )]
    HorizonExhausted { horizon: u64, played: u64 },

    #[error("environment returned reward {reward} outside [0, 1]")]
    RewardOutOfRange { reward: f64 },

    #[error("model invariant violated: {0}")]
    ModelInvariant(String),

    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("{path}: row {row}, column {column}: {message}")]
    Range {
        path: String,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("ground set of size {n} exceeds the brute-force limit of {limit}; use a greedy reference instead")]
    TooLarge { n: usize, limit: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("need at least 3 positive points for a slope fit, have {0}")]
    InsufficientPoints(usize),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InstanceMismatch { .. } => "instance_mismatch",
            Error::Contract(_) => "contract",
            Error::InvalidConstraint(_) => "invalid_constraint",
            Error::InfeasibleQuery(_) => "infeasible_query",
            Error::PreconditionViolated { .. } => "precondition_violated",
            Error::HorizonTooSmall { .. } => "horizon_too_small",
            Error::HorizonExhausted { .. } => "horizon_exhausted",
            Error::RewardOutOfRange { .. } => "reward_out_of_range",
            Error::ModelInvariant(_) => "model_invariant",
            Error::Parse { .. } => "parse",
            Error::Range { .. } => "range",
            Error::TooLarge { .. } => "too_large",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::InsufficientPoints(_) => "insufficient_points",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
