use thiserror::Error;

/// Errors across the estimator pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value at index {idx}: {value}")]
    NonFinite { idx: usize, value: f64 },

    #[error("weights not on the simplex (sum = {sum})")]
    InvalidWeights { sum: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate ratio: OT estimate did not decrease from n to eta*n; increase N or n")]
    DegenerateRatio,

    #[error("instance too large: {got} exceeds limit {limit}")]
    SizeLimit { got: usize, limit: usize },

    #[error("matrix is not symmetric positive semidefinite: {0}")]
    NotPsd(String),

    #[error("finite sample stream exhausted after {drawn} points")]
    StreamExhausted { drawn: usize },

    #[error("seed streams must be distinct: support and MC share (master_seed, stream_id)")]
    SharedSeedStream,

    #[error("{path}:{line}: {msg}")]
    Config {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: parse error: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
