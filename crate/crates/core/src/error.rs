use alloc::string::String;
use alloc::vec::Vec;

/// Two or more raw tokens that map to the same canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collision {
    pub canonical: String,
    pub raw: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("duplicate tokens: {}", join(.0))]
    DuplicateTokens(Vec<String>),

    #[error("canonicalization collisions: {}", describe_collisions(.0))]
    CanonicalCollision(Vec<Collision>),

    #[error("token id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: usize, size: usize },

    #[error("shape mismatch: {rows}x{dim} needs {expected} values, got {found}")]
    ShapeMismatch { rows: usize, dim: usize, expected: usize, found: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("row count mismatch for {what}: expected {expected}, found {found}")]
    RowMismatch { what: &'static str, expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("NaN or infinite value in input vector at position {0}")]
    NonFiniteInput(usize),

    #[error("vector for token {0} has zero norm")]
    ZeroNorm(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty effective vocabulary: no token reaches min_count {0}")]
    EmptyEffectiveVocabulary(u64),

    #[error("{count} tokens need a fallback initialization but fallback is disabled (first: token {first})")]
    FallbackDisabled { count: usize, first: usize },

    #[error("non-finite output row for token {0}")]
    NonFiniteOutput(usize),

    #[error("need at least 2 seed pairs, got {0}")]
    TooFewPairs(usize),

    #[error("singular value decomposition did not converge")]
    SvdFailed,
}

pub type Result<T> = core::result::Result<T, Error>;

fn join(items: &[String]) -> String {
    items.join(", ")
}

fn describe_collisions(items: &[Collision]) -> String {
    items.iter().map(|c| alloc::format!("{:?} <- [{}]", c.canonical, c.raw.join(", "))).collect::<Vec<_>>().join("; ")
}
