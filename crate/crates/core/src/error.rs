use thiserror::Error;

pub type Result<T> = std::result::Result<T, NssvmError>;

#[derive(Debug, Error)]
pub enum NssvmError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no samples")]
    EmptyInput,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sparsity level {s} outside [1, {m}]")]
    SparsityOutOfRange { s: usize, m: usize },

    #[error("label {0} is not in {{-1, +1}}; binarize the dataset first")]
    NonBinaryLabel(f64),

    #[error("non-finite feature value at sample {row}")]
    NonFiniteFeature { row: usize },

    #[error("numerical breakdown at iteration {iter}: {detail}")]
    NumericalBreakdown { iter: usize, detail: String },

    #[error("alpha has empty support")]
    EmptySupport,

    #[error("instance too large for exhaustive enumeration (m = {m}, s = {s}; limits m <= 14, s <= 4)")]
    OracleTooLarge { m: usize, s: usize },

    #[error("oracle failure: {0}")]
    OracleFailure(String),

    #[error("unknown solver '{0}'")]
    UnknownSolver(String),
}
