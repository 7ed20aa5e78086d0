use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported dimension N = {0}")]
    UnsupportedDimension(usize),

    #[error("grid/reflection mismatch: {0}")]
    SymmetryMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no bracket for the antisymmetry gap in [{p_lo}, {p_hi}]; gap table: {table:?}")]
    Bracket {
        p_lo: f64,
        p_hi: f64,
        /// (p, gap) pairs probed during the failed search.
        table: Vec<(f64, f64)>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}
