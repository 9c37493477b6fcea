use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("corrupt {format} header: {reason}")]
    CorruptHeader { format: &'static str, reason: String },

    #[error("{format} size mismatch: header implies {expected} bytes, found {actual}")]
    SizeMismatch {
        format: &'static str,
        expected: u64,
        actual: u64,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("row {row} out of range for {n} rows")]
    RowOutOfRange { row: usize, n: usize },

    #[error("no nonzero elements to fit a logarithmic range")]
    AllZero,

    #[error("degenerate range: e_min == e_max == {0}")]
    DegenerateRange(f64),

    #[error("codes not populated; run encode first")]
    CodesMissing,

    #[error("graph has {n} nodes, exact estimator is capped at {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("graph lacks self-loops required by mean aggregation")]
    MissingSelfLoops,

    #[error("mismatched workloads: {0}")]
    WorkloadMismatch(String),
}
