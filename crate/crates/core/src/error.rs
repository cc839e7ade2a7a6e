use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains a non-finite entry: {0}")]
    NonFinite(String),

    #[error("pair (A, C) is not observable: coding matrix has rank {rank}, need {state_dim}")]
    NotObservable { rank: usize, state_dim: usize },

    #[error("sensor subset must be nonempty")]
    EmptySubset,

    #[error("sensor index {index} out of range 1..={sensor_count}")]
    IndexOutOfRange { index: usize, sensor_count: usize },

    #[error("window [{start}, {start}+{window}) exceeds horizon {horizon}")]
    WindowOutOfRange {
        start: usize,
        window: usize,
        horizon: usize,
    },

    #[error("state matrix is not diagonalizable; eigenspace method does not apply")]
    NotDiagonalizable,

    #[error(
        "security-index methods disagree: subset-kernel {subset}, spark {spark:?}, eigen {eigen:?}"
    )]
    MethodDisagreement {
        subset: usize,
        spark: Option<usize>,
        eigen: Option<usize>,
    },

    #[error("exhaustive search over {sensor_count} sensors exceeds the budget of {max}")]
    TooManySensors { sensor_count: usize, max: usize },

    #[error("a {rows}x{cols} matrix with fewer rows than columns cannot be left unimodular")]
    WideMatrix { rows: usize, cols: usize },

    #[error("invalid kernel representation: {0}")]
    InvalidKernelRep(String),

    #[error("expected a square polynomial matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("horizon {horizon} too short, need at least {needed} samples")]
    HorizonTooShort { horizon: usize, needed: usize },

    #[error("attack weight {weight} exceeds sensor count {sensor_count}")]
    InvalidWeight { weight: usize, sensor_count: usize },

    #[error(
        "no sensor support of weight <= {max_weight} is consistent with the received trajectory \
         ({supports_tested} supports tested); the attack is outside the correctable regime"
    )]
    NoConsistentSupport {
        max_weight: usize,
        supports_tested: usize,
    },

    #[error(
        "multiple supports of weight {weight} fit the received trajectory but disagree on the \
         corrected output; tolerance configuration is inconsistent"
    )]
    AmbiguousCorrection { weight: usize },

    #[error(
        "trusted sensors observe only a rank-{rank} subspace of the {state_dim}-dimensional state"
    )]
    InsufficientObservability { rank: usize, state_dim: usize },

    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
