use thiserror::Error;

/// Everything that can go wrong while building, scoring or parsing.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid grade {grade}: scale has {size} grades")]
    InvalidGrade { grade: usize, size: usize },

    #[error("invalid grade scale: {0}")]
    InvalidScale(String),

    #[error("invalid gain map: {0}")]
    InvalidGainMap(String),

    #[error("empty SERP")]
    EmptySerp,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{metric} is undefined: {reason}")]
    UndefinedMetric { metric: String, reason: String },

    #[error("cannot compare SERPs of lengths {left} and {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("SERP {0} is not a member of the universe")]
    NotInUniverse(String),

    #[error("universe would hold {size} members (k = {depth}); limits are k <= {max_depth} and size <= {max_size}")]
    Capacity { size: u128, depth: usize, max_depth: usize, max_size: u128 },

    #[error("degenerate scale: {0} distinct value(s), at least 2 needed")]
    DegenerateScale(usize),

    #[error("score {0} is not one of the intervalizer's source values")]
    Unmapped(String),

    #[error("topic {topic}: document {doc} is unjudged")]
    Unjudged { topic: String, doc: String },

    #[error("join error: {0}")]
    Join(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {message}")]
    Integrity { line: usize, message: String },

    #[error("audit error: {0}")]
    Audit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
