use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid operation set: {0}")]
    InvalidOperationSet(String),

    #[error("unknown operation label `{0}`")]
    UnknownOperation(String),

    #[error("invalid node index: edge ({src}, {dst}) with {nodes} nodes")]
    InvalidNode { src: usize, dst: usize, nodes: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("operation code {code} out of range (must be < {num_ops})")]
    CodeOutOfRange { code: usize, num_ops: usize },

    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("architectures belong to different search spaces")]
    SpaceMismatch,

    #[error("illegal move: {0}")]
    IllegalMove(String),

    #[error("radius exceeds {max} (got {radius})")]
    RadiusTooLarge { radius: usize, max: usize },

    #[error("radius must be at least 1")]
    RadiusZero,

    #[error("enumeration exceeded node cap of {cap}")]
    ExplosionGuard { cap: usize },

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("duplicate entry for architecture `{arch}` on dataset `{dataset}`")]
    DuplicateEntry { arch: String, dataset: String },

    #[error("accuracy {0} outside [0, 100]")]
    AccuracyOutOfRange(f64),

    #[error("architecture `{0}` missing from accuracy table")]
    MissingArchitecture(String),

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("empty sample")]
    EmptySample,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("search space too large for exhaustive enumeration ({0} architectures)")]
    SpaceTooLarge(u128),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
