//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands live on different grids or tensor shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A symbol map produced non-finite or wrongly sized output.
    #[error("symbol error: {0}")]
    Symbol(String),

    /// Invalid construction arguments (grid sizes, shape blocks, layouts, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A coercivity certificate was required but is absent or non-positive.
    #[error("certificate error: {0}")]
    Certificate(String),

    /// A translation was used before passing Q*-verification.
    #[error("unverified translation '{0}': run qstar_min_eig before use")]
    UnverifiedTranslation(String),

    /// The projected operator is singular on the constrained subspace; the
    /// parameter point belongs to the generalized spectrum.
    #[error("generalized spectrum hit: smallest singular value {sigma_min:.3e}")]
    GeneralizedSpectrumHit { sigma_min: f64 },

    /// The coefficient field is singular at a grid point.
    #[error("pointwise singular operator at grid index {index} (smallest singular value {sigma_min:.3e})")]
    PointwiseSingular { index: usize, sigma_min: f64 },

    /// Dense-oracle subspace dimension exceeds the configured cap.
    #[error("subspace dimension {dim} exceeds oracle cap {cap}")]
    OracleCapExceeded { dim: usize, cap: usize },

    /// The soundness cross-check between certified map points and oracle
    /// spectrum points failed.
    #[error("soundness violation: {0}")]
    SoundnessViolation(String),

    /// Configuration schema violation.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
