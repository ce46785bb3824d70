use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigendecomposition did not converge for a {dim}x{dim} matrix")]
    EigenFailure { dim: usize },

    #[error("operator couples basis states in different blocks ({row}, {col})")]
    BlockStructure { row: usize, col: usize },

    #[error("dimension {dim} exceeds the dense limit {limit}; use the block-diagonal propagator")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("resonant denominator at Floquet harmonic n = {harmonic}")]
    ResonantHarmonic { harmonic: i32 },

    #[error("singular system (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("truncation error {error:.3e} exceeds tolerance {tol:.1e}: {context}")]
    Truncation { error: f64, tol: f64, context: String },
}
