use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed group element: {0}")]
    MalformedElement(String),

    #[error("invalid group specification: {0}")]
    InvalidGroup(String),

    #[error("invalid generating set: {0}")]
    InvalidGenerators(String),

    #[error("set size {size} exceeds the configured cap of {cap} elements")]
    SizeCap { size: usize, cap: usize },

    #[error("group mismatch: {0}")]
    SpecMismatch(String),

    #[error("coefficient kind mismatch: {0}")]
    CoefficientKind(String),

    #[error("not a contraction: ||g||_1 = {norm} must be < 1")]
    NotAContraction { norm: f64 },

    #[error("series diverges: ||g||_1 = {norm} must be < 1")]
    SeriesDivergent { norm: f64 },

    #[error("element is not self-adjoint")]
    NotSelfAdjoint,

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositive { row: usize, pivot: f64 },

    #[error("positivity certificate rejected: {0}")]
    Certificate(String),

    #[error("truncated operator is singular; lattice index is infinite")]
    InfiniteIndex,

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("integrand vanishes exactly at a grid node")]
    NodeHit,

    #[error("no certificate: {0}")]
    NoCertificate(String),

    #[error("determinant of the zero element is undefined")]
    ZeroElement,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
