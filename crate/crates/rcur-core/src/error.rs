use thiserror::Error;

/// Errors produced by the decomposition pipelines and their kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("index {index} out of bounds for universe {universe}")]
    IndexOutOfBounds { index: usize, universe: usize },

    #[error("rank {k} out of range for {rows}x{cols} matrix")]
    RankOutOfRange { k: usize, rows: usize, cols: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerically rank-deficient core submatrix (sigma_r = {sigma_r:.3e}, sigma_1 = {sigma_1:.3e})")]
    RankDeficientCore { sigma_r: f64, sigma_1: f64 },

    #[error("insufficient samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("degenerate greedy selection: every remaining column has unit-norm coordinates")]
    DegenerateSelection,

    #[error("infeasible sparsity caps: alpha = {alpha} on a {rows}x{cols} matrix")]
    InfeasibleSparsity { alpha: f64, rows: usize, cols: usize },

    #[error("parse error in {path}: {reason}")]
    Parse { path: String, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
