use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A word or window would exceed the configured letter cap.
    #[error("requested {requested} letters exceeds the cap of {cap}")]
    ResourceCap { requested: u64, cap: u64 },

    /// Window boundaries are not multiples of the block length.
    #[error("window [{start}, {start}+{len}) is not aligned to blocks of length {block_len}")]
    Misaligned {
        start: i64,
        len: u64,
        block_len: u64,
    },

    /// The binary block decomposition of a prefix failed its string certificate.
    #[error("prefix of length {len} does not equal its block decomposition")]
    DecompositionMismatch { len: u64 },

    /// An aligned chunk matched neither block word of its level.
    #[error("block at offset {offset} matches neither block word at level {level}")]
    BlockMismatch { offset: i64, level: u32 },

    /// An argument left the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// All norms in a fit window are equal; no exponent can be extracted.
    #[error("degenerate fit: all norms in the window are equal")]
    DegenerateFit,

    /// Too few samples or too narrow a time range for exponent estimation.
    #[error("insufficient range: {samples} samples spanning {decades:.2} decades")]
    InsufficientRange { samples: usize, decades: f64 },

    /// A hypothesis required by an inequality audit does not hold.
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
