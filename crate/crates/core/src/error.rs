use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Evaluation at a point where a scaling factor or field is singular.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("no catalog row for {query}; nearest rows: {nearest:?}")]
    UnknownRegime { query: String, nearest: Vec<String> },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("factorization failed after {attempts} attempts at shift {shift}")]
    Breakdown { shift: f64, attempts: usize },
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("level overlap: {0}")]
    LevelOverlap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
