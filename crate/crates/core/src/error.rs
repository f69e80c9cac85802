use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {0} lies outside the domain [0, 1]")]
    Domain(f64),
    #[error("invalid breakpoints: {0}")]
    Breakpoints(String),
    #[error("dilation must be nonzero")]
    DegenerateDilation,
    #[error("curve is not compactly supported: {0}")]
    NonCompact(String),
    #[error("mask entry j = {j} violates support preservation (need 0 <= j <= {max})")]
    SupportViolation { j: i64, max: i64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("endpoint mismatch at junction {junction}: {detail}")]
    GlueMismatch { junction: usize, detail: String },
    #[error("anchor mismatch is not compactly supported: {0}")]
    NonCompactMismatch(String),
    #[error("breakpoint cap exceeded: {needed} > {cap}")]
    CapExceeded { needed: f64, cap: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("inconsistent generator: {0}")]
    Generator(String),
}

pub type Result<T> = std::result::Result<T, Error>;
