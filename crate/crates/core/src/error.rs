use thiserror::Error;

#[derive(Debug, Error)]
pub enum GtfError {
    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("self-loop at node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("elementwise penalty is only defined for k <= 2, got k = {0}")]
    UnsupportedOrder(usize),

    #[error("elementwise penalty requires unit edge weights")]
    WeightedGraph,

    #[error("graph is not a chain")]
    NotAChain,

    #[error("dense path refused: n = {n} exceeds limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("vector {0} is not unit norm")]
    NotUnitNorm(usize),

    #[error("solver stopped after {iterations} iterations without converging")]
    MaxIterationsExceeded { iterations: usize },

    #[error("inner conjugate gradient stagnated (relative residual {0:.3e})")]
    IllConditioned(f64),

    #[error("class {class}: {source}")]
    ClassSolve { class: usize, source: Box<GtfError> },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GtfError>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(GtfError::DimensionMismatch { expected, got });
    }
    Ok(())
}
