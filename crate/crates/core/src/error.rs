use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("adjacency matrix is not square: row {row} has {len} entries, expected {n}")]
    NonSquare { row: usize, len: usize, n: usize },
    #[error("entry ({0}, {1}) is not binary")]
    NonBinary(usize, usize),
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("undirected graph has asymmetric adjacency at ({0}, {1})")]
    AsymmetricUndirected(usize, usize),
    #[error("node {0} does not carry exactly one label")]
    BadOneHot(usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("domain too large to enumerate: {bits} free bits exceed the cap of {cap}")]
    DomainTooLarge { bits: usize, cap: usize },
    #[error("no feasible graph found after {0} sampling attempts")]
    SamplingExhausted(usize),

    #[error("exponential kernel variant requires a kernel variance")]
    MissingVariance,

    #[error("covariance factorization failed even with added jitter")]
    FactorizationFailure,
    #[error("need at least {needed} training points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid size bounds [{min}, {max}]")]
    InvalidSizeBounds { min: usize, max: usize },
    #[error("model and domain are incompatible: {0}")]
    IncompatibleDomain(String),
    #[error("GP model has no training data")]
    UnfittedModel,
    #[error("domain constraints are contradictory: {0}")]
    InfeasibleDomainDetected(String),
    #[error("file export requires a fixed graph size")]
    UnsupportedBoundedSizeExport,
    #[error("assignment does not cover variable {0}")]
    MissingVariable(String),
    #[error("search space exceeds the cap of {0} nodes")]
    SpaceTooLarge(u64),

    #[error("unknown objective oracle `{0}`")]
    UnknownOracle(String),
    #[error("invalid oracle parameters: {0}")]
    OracleParams(String),

    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
