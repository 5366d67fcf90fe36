use thiserror::Error;

/// Errors surfaced by dataset generation, fitting, estimation, and persistence.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Dimension mismatch between inputs.
    #[error("shape error: {0}")]
    Shape(String),

    /// An index or count exceeds what the model provides.
    #[error("range error: {0}")]
    Range(String),

    /// A computation on non-finite or numerically unusable input.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The CRV quality measure is undefined because total variance is zero.
    #[error("undefined measure: total variance is zero")]
    ZeroVariance,

    /// Geometry class name not in the registry.
    #[error("unknown geometry class `{0}` (known: {1})")]
    UnknownClass(String, String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// File does not parse as an EGPC container.
    #[error("format error: {0}")]
    Format(String),

    /// Container format version not understood by this build.
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),

    /// Trailing checksum does not match the file contents.
    #[error("checksum mismatch: file is truncated or corrupted")]
    ChecksumMismatch,
}

pub type Result<T> = std::result::Result<T, Error>;
